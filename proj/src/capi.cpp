#include "flowtel.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "flowtel/errors.hpp"
#include "flowtel/experiments.hpp"
#include "flowtel/fermat_sketch.hpp"
#include "flowtel/serialize.hpp"

#include "json.hpp"

struct flowtel_fermat_struct {
   flowtel::FermatSketch sketch;
};

namespace {

int error_to_code(const flowtel::Error& e) { return static_cast<int>(e.code()); }

template <typename F>
int guarded(F&& fn) {
   try {
      return fn();
   } catch (const flowtel::Error& e) {
      return error_to_code(e);
   } catch (const nlohmann::json::exception&) {
      return FLOWTEL_ERR_BAD_FORMAT;
   } catch (const std::bad_alloc&) {
      return FLOWTEL_ERR_INTERNAL;
   } catch (const std::exception&) {
      return FLOWTEL_ERR_INTERNAL;
   }
}

char* dup_string(const std::string& s) {
   char* out = static_cast<char*>(std::malloc(s.size() + 1));
   if (out == nullptr) return nullptr;
   std::memcpy(out, s.data(), s.size() + 1);
   return out;
}

int out_string(char** dst, const std::string& s) {
   *dst = dup_string(s);
   return *dst == nullptr ? FLOWTEL_ERR_INTERNAL : FLOWTEL_OK;
}

}  // namespace

extern "C" {

uint32_t flowtel_version(void) { return 10000; }

const char* flowtel_error_name(int code) {
   switch (code) {
      case FLOWTEL_OK:
         return "ok";
      case FLOWTEL_ERR_NULL_POINTER:
         return "null pointer";
      case FLOWTEL_ERR_BAD_PARAMETER:
         return "bad parameter";
      case FLOWTEL_ERR_NO_INVERSE:
         return "no modular inverse";
      case FLOWTEL_ERR_ID_OUT_OF_RANGE:
         return "flow id out of range";
      case FLOWTEL_ERR_INCOMPATIBLE:
         return "incompatible sketches";
      case FLOWTEL_ERR_FOLD_INDIVISIBLE:
         return "width not divisible by fold factor";
      case FLOWTEL_ERR_IO:
         return "io error";
      case FLOWTEL_ERR_BAD_FORMAT:
         return "bad format";
      case FLOWTEL_ERR_INTERNAL:
         return "internal error";
      case FLOWTEL_ERR_DECODE_INCOMPLETE:
         return "decode incomplete";
      case FLOWTEL_ERR_UNKNOWN_EXPERIMENT:
         return "unknown experiment";
      default:
         return "unknown error";
   }
}

void flowtel_free(void* ptr) { std::free(ptr); }

int flowtel_fermat_create(flowtel_fermat_t** sketch, uint32_t d, uint32_t m, uint64_t seed,
                          uint32_t fingerprint_bits) {
   if (sketch == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   *sketch = nullptr;
   return guarded([&] {
      auto params = flowtel::FermatParams::make(d, m, seed, flowtel::kDefaultPrime, fingerprint_bits);
      *sketch = new flowtel_fermat_struct{flowtel::FermatSketch(params)};
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_destroy(flowtel_fermat_t* sketch) {
   delete sketch;
   return FLOWTEL_OK;
}

int flowtel_fermat_clone(flowtel_fermat_t** sketch, const flowtel_fermat_t* source) {
   if (sketch == nullptr || source == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   return guarded([&] {
      *sketch = new flowtel_fermat_struct{source->sketch};
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_update(flowtel_fermat_t* sketch, uint64_t flow, int64_t delta) {
   if (sketch == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   return guarded([&] {
      sketch->sketch.update(flow, delta);
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_insert(flowtel_fermat_t* sketch, uint64_t flow) { return flowtel_fermat_update(sketch, flow, 1); }

int flowtel_fermat_combine(flowtel_fermat_t** sketch, const flowtel_fermat_t* a, const flowtel_fermat_t* b,
                           int64_t sign) {
   if (sketch == nullptr || a == nullptr || b == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   if (sign != 1 && sign != -1) return FLOWTEL_ERR_BAD_PARAMETER;
   return guarded([&] {
      *sketch = new flowtel_fermat_struct{
          flowtel::FermatSketch::combine(a->sketch, b->sketch, static_cast<int>(sign))};
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_fold(flowtel_fermat_t** sketch, const flowtel_fermat_t* source, uint32_t k) {
   if (sketch == nullptr || source == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   return guarded([&] {
      flowtel::FermatSketch folded = source->sketch;
      for (uint32_t i = 0; i < k; ++i) folded = folded.fold(2);
      *sketch = new flowtel_fermat_struct{std::move(folded)};
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_decode(flowtel_fermat_t* sketch, uint64_t** flows, int64_t** counts, size_t* n) {
   if (sketch == nullptr || flows == nullptr || counts == nullptr || n == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   *flows = nullptr;
   *counts = nullptr;
   *n = 0;
   return guarded([&] {
      auto out = sketch->sketch.decode();
      size_t count = out.flowset.size();
      auto* f = static_cast<uint64_t*>(std::malloc(sizeof(uint64_t) * std::max<size_t>(count, 1)));
      auto* c = static_cast<int64_t*>(std::malloc(sizeof(int64_t) * std::max<size_t>(count, 1)));
      if (f == nullptr || c == nullptr) {
         std::free(f);
         std::free(c);
         return FLOWTEL_ERR_INTERNAL;
      }
      size_t i = 0;
      for (const auto& [flow, freq] : out.flowset.entries) {
         f[i] = flow;
         c[i] = freq;
         ++i;
      }
      *flows = f;
      *counts = c;
      *n = count;
      return out.ok() ? FLOWTEL_OK : FLOWTEL_ERR_DECODE_INCOMPLETE;
   });
}

int flowtel_fermat_linear_count(const flowtel_fermat_t* sketch, double* estimate, int* saturated) {
   if (sketch == nullptr || estimate == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   return guarded([&] {
      auto lc = flowtel::linear_count_array(sketch->sketch, 0);
      *estimate = static_cast<double>(lc.estimate);
      if (saturated != nullptr) *saturated = lc.saturated ? 1 : 0;
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_equal(const flowtel_fermat_t* a, const flowtel_fermat_t* b, int* equal) {
   if (a == nullptr || b == nullptr || equal == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   *equal = a->sketch == b->sketch ? 1 : 0;
   return FLOWTEL_OK;
}

int flowtel_fermat_serialize(const flowtel_fermat_t* sketch, uint8_t** bytes, size_t* len) {
   if (sketch == nullptr || bytes == nullptr || len == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   *bytes = nullptr;
   *len = 0;
   return guarded([&] {
      std::string blob = flowtel::to_binary(sketch->sketch);
      auto* buf = static_cast<uint8_t*>(std::malloc(std::max<size_t>(blob.size(), 1)));
      if (buf == nullptr) return FLOWTEL_ERR_INTERNAL;
      std::memcpy(buf, blob.data(), blob.size());
      *bytes = buf;
      *len = blob.size();
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_deserialize(flowtel_fermat_t** sketch, const uint8_t* bytes, size_t len) {
   if (sketch == nullptr || bytes == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   return guarded([&] {
      std::string blob(reinterpret_cast<const char*>(bytes), len);
      *sketch = new flowtel_fermat_struct{flowtel::fermat_from_binary(blob)};
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_save(const flowtel_fermat_t* sketch, const char* path) {
   if (sketch == nullptr || path == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   return guarded([&] {
      flowtel::save_file(path, flowtel::to_binary(sketch->sketch));
      return FLOWTEL_OK;
   });
}

int flowtel_fermat_load(flowtel_fermat_t** sketch, const char* path) {
   if (sketch == nullptr || path == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   return guarded([&] {
      *sketch = new flowtel_fermat_struct{flowtel::fermat_from_file(path)};
      return FLOWTEL_OK;
   });
}

int flowtel_experiment_run(const char* name, const char* config_json, char** result_json) {
   if (name == nullptr || result_json == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   *result_json = nullptr;
   return guarded([&] {
      nlohmann::json cfg =
          config_json == nullptr || config_json[0] == '\0' ? nlohmann::json::object() : nlohmann::json::parse(config_json);
      std::string verb = name;
      nlohmann::json result;
      if (verb == "threshold-sweep")
         result = flowtel::experiments::threshold_sweep(cfg);
      else if (verb == "loss-sweep")
         result = flowtel::experiments::loss_sweep(cfg);
      else if (verb == "shift-scenario")
         result = flowtel::experiments::shift_scenario(cfg);
      else if (verb == "accuracy")
         result = flowtel::experiments::accuracy_suite(cfg);
      else
         return FLOWTEL_ERR_UNKNOWN_EXPERIMENT;
      return out_string(result_json, result.dump(2));
   });
}

int flowtel_decode_file(const char* path, char** result_json) {
   if (path == nullptr || result_json == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   *result_json = nullptr;
   return guarded([&] { return out_string(result_json, flowtel::experiments::decode_file(path).dump(2)); });
}

int flowtel_result_csv(const char* result_json, char** csv) {
   if (result_json == nullptr || csv == nullptr) return FLOWTEL_ERR_NULL_POINTER;
   *csv = nullptr;
   return guarded([&] {
      nlohmann::json result = nlohmann::json::parse(result_json);
      if (!result.contains("rows") || !result.contains("columns")) return FLOWTEL_ERR_BAD_PARAMETER;
      return out_string(csv, flowtel::experiments::rows_as_csv(result));
   });
}

}  // extern "C"
