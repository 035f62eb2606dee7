#include "flowtel/serialize.hpp"

#include <fstream>

#include "json.hpp"

#include "flowtel/errors.hpp"

namespace flowtel {

namespace {

constexpr uint32_t kFermatMagic = 0x46534b31;  // "FSK1"
constexpr uint32_t kTowerMagic = 0x54534b31;   // "TSK1"
constexpr uint32_t kFormatVersion = 1;

void put_u32(std::string& out, uint32_t v) {
   for (int i = 0; i < 4; ++i)
      out.push_back((char)((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
   for (int i = 0; i < 8; ++i)
      out.push_back((char)((v >> (8 * i)) & 0xff));
}

class Reader {
public:
   explicit Reader(const std::string& bytes) : bytes_(bytes) {}

   uint32_t u32() {
      need(4);
      uint32_t v = 0;
      for (int i = 0; i < 4; ++i)
         v |= (uint32_t)(uint8_t)bytes_[pos_++] << (8 * i);
      return v;
   }

   uint64_t u64() {
      need(8);
      uint64_t v = 0;
      for (int i = 0; i < 8; ++i)
         v |= (uint64_t)(uint8_t)bytes_[pos_++] << (8 * i);
      return v;
   }

   int64_t i64() { return (int64_t)u64(); }

   void done() const {
      if (pos_ != bytes_.size())
         throw bad_format("trailing bytes after sketch payload");
   }

private:
   void need(size_t n) const {
      if (pos_ + n > bytes_.size())
         throw bad_format("truncated sketch payload");
   }

   const std::string& bytes_;
   size_t pos_ = 0;
};

}  // namespace

std::string to_binary(const FermatSketch& s) {
   const FermatParams& params = s.params();
   std::string out;
   out.reserve(40 + (size_t)params.d * (8 + (size_t)params.m * 16));
   put_u32(out, kFermatMagic);
   put_u32(out, kFormatVersion);
   put_u32(out, params.d);
   put_u32(out, params.m);
   put_u64(out, params.p);
   put_u32(out, params.fingerprint_bits);
   put_u64(out, params.fingerprint_seed);
   for (uint64_t seed : params.seeds)
      put_u64(out, seed);
   for (uint32_t i = 0; i < params.d; ++i) {
      for (uint32_t j = 0; j < params.m; ++j) {
         const FermatBucket& b = s.bucket(i, j);
         put_u64(out, (uint64_t)b.count);
         put_u64(out, b.idsum);
      }
   }
   return out;
}

FermatSketch fermat_from_binary(const std::string& bytes) {
   Reader r(bytes);
   if (r.u32() != kFermatMagic)
      throw bad_format("not a sketch dump");
   if (r.u32() != kFormatVersion)
      throw bad_format("unsupported sketch format version");
   FermatParams params;
   params.d = r.u32();
   params.m = r.u32();
   params.p = r.u64();
   params.fingerprint_bits = r.u32();
   params.fingerprint_seed = r.u64();
   params.seeds.resize(params.d);
   for (uint32_t i = 0; i < params.d; ++i)
      params.seeds[i] = r.u64();
   FermatSketch s(params);
   for (uint32_t i = 0; i < params.d; ++i) {
      for (uint32_t j = 0; j < params.m; ++j) {
         FermatBucket& b = s.bucket(i, j);
         b.count = r.i64();
         b.idsum = r.u64();
         if (b.idsum >= params.p)
            throw bad_format("idsum at or above the modulus");
      }
   }
   r.done();
   return s;
}

std::string to_binary(const TowerSketch& t) {
   const TowerConfig& cfg = t.config();
   std::string out;
   put_u32(out, kTowerMagic);
   put_u32(out, kFormatVersion);
   put_u32(out, (uint32_t)cfg.levels.size());
   for (const TowerLevel& lv : cfg.levels) {
      put_u32(out, lv.width);
      put_u32(out, lv.bits);
      put_u64(out, lv.seed);
   }
   for (size_t i = 0; i < cfg.levels.size(); ++i)
      for (uint32_t v : t.level_array(i))
         put_u32(out, v);
   return out;
}

TowerSketch tower_from_binary(const std::string& bytes) {
   Reader r(bytes);
   if (r.u32() != kTowerMagic)
      throw bad_format("not a tower dump");
   if (r.u32() != kFormatVersion)
      throw bad_format("unsupported tower format version");
   TowerConfig cfg;
   cfg.levels.resize(r.u32());
   for (TowerLevel& lv : cfg.levels) {
      lv.width = r.u32();
      lv.bits = r.u32();
      lv.seed = r.u64();
   }
   TowerSketch t(cfg);
   for (size_t i = 0; i < cfg.levels.size(); ++i) {
      for (uint32_t j = 0; j < cfg.levels[i].width; ++j) {
         uint32_t v = r.u32();
         if (v > t.saturation_value(i))
            throw bad_format("counter above its saturation value");
         t.set_counter(i, j, v);
      }
   }
   r.done();
   return t;
}

nlohmann::json to_json(const FermatSketch& s) {
   const FermatParams& params = s.params();
   nlohmann::json j;
   j["format"] = "fermat-sketch";
   j["version"] = kFormatVersion;
   j["params"] = {
      {"d", params.d},
      {"m", params.m},
      {"p", params.p},
      {"seeds", params.seeds},
      {"fingerprint_bits", params.fingerprint_bits},
      {"fingerprint_seed", params.fingerprint_seed},
   };
   nlohmann::json arrays = nlohmann::json::array();
   for (uint32_t i = 0; i < params.d; ++i) {
      nlohmann::json counts = nlohmann::json::array();
      nlohmann::json idsums = nlohmann::json::array();
      for (uint32_t j2 = 0; j2 < params.m; ++j2) {
         counts.push_back(s.bucket(i, j2).count);
         idsums.push_back(s.bucket(i, j2).idsum);
      }
      arrays.push_back({{"counts", std::move(counts)}, {"idsums", std::move(idsums)}});
   }
   j["arrays"] = std::move(arrays);
   return j;
}

FermatSketch fermat_from_json(const nlohmann::json& j) {
   if (j.value("format", "") != "fermat-sketch")
      throw bad_format("not a sketch dump");
   if (j.value("version", 0u) != kFormatVersion)
      throw bad_format("unsupported sketch format version");
   const nlohmann::json& pj = j.at("params");
   FermatParams params;
   params.d = pj.at("d").get<uint32_t>();
   params.m = pj.at("m").get<uint32_t>();
   params.p = pj.at("p").get<uint64_t>();
   params.seeds = pj.at("seeds").get<std::vector<uint64_t>>();
   params.fingerprint_bits = pj.at("fingerprint_bits").get<uint32_t>();
   params.fingerprint_seed = pj.at("fingerprint_seed").get<uint64_t>();
   FermatSketch s(params);
   const nlohmann::json& arrays = j.at("arrays");
   if (arrays.size() != params.d)
      throw bad_format("array count does not match d");
   for (uint32_t i = 0; i < params.d; ++i) {
      const auto& counts = arrays[i].at("counts");
      const auto& idsums = arrays[i].at("idsums");
      if (counts.size() != params.m || idsums.size() != params.m)
         throw bad_format("bucket row does not match m");
      for (uint32_t j2 = 0; j2 < params.m; ++j2) {
         FermatBucket& b = s.bucket(i, j2);
         b.count = counts[j2].get<int64_t>();
         b.idsum = idsums[j2].get<uint64_t>();
         if (b.idsum >= params.p)
            throw bad_format("idsum at or above the modulus");
      }
   }
   return s;
}

nlohmann::json to_json(const TowerSketch& t) {
   nlohmann::json j;
   j["format"] = "tower-sketch";
   j["version"] = kFormatVersion;
   nlohmann::json levels = nlohmann::json::array();
   for (size_t i = 0; i < t.config().levels.size(); ++i) {
      const TowerLevel& lv = t.config().levels[i];
      levels.push_back({
         {"width", lv.width},
         {"bits", lv.bits},
         {"seed", lv.seed},
         {"counters", t.level_array(i)},
      });
   }
   j["levels"] = std::move(levels);
   return j;
}

TowerSketch tower_from_json(const nlohmann::json& j) {
   if (j.value("format", "") != "tower-sketch")
      throw bad_format("not a tower dump");
   if (j.value("version", 0u) != kFormatVersion)
      throw bad_format("unsupported tower format version");
   TowerConfig cfg;
   for (const auto& lj : j.at("levels"))
      cfg.levels.push_back(TowerLevel{lj.at("width").get<uint32_t>(), lj.at("bits").get<uint32_t>(),
                                      lj.at("seed").get<uint64_t>()});
   TowerSketch t(cfg);
   for (size_t i = 0; i < cfg.levels.size(); ++i) {
      auto counters = j.at("levels")[i].at("counters").get<std::vector<uint32_t>>();
      if (counters.size() != cfg.levels[i].width)
         throw bad_format("counter row does not match the level width");
      for (uint32_t j2 = 0; j2 < cfg.levels[i].width; ++j2) {
         if (counters[j2] > t.saturation_value(i))
            throw bad_format("counter above its saturation value");
         t.set_counter(i, j2, counters[j2]);
      }
   }
   return t;
}

nlohmann::json to_json(const Flowset& fs) {
   nlohmann::json arr = nlohmann::json::array();
   for (const auto& [f, n] : fs.entries)
      arr.push_back({{"flow", f}, {"frequency", n}});
   return arr;
}

Flowset flowset_from_json(const nlohmann::json& j) {
   Flowset fs;
   for (const auto& e : j)
      fs.add(e.at("flow").get<uint64_t>(), e.at("frequency").get<int64_t>());
   return fs;
}

nlohmann::json to_json(const SketchGroup& g) {
   nlohmann::json j;
   j["format"] = "sketch-group";
   j["version"] = kFormatVersion;
   j["switch_id"] = g.switch_id;
   j["epoch_index"] = g.epoch_index;
   j["generation"] = g.config.generation;
   j["layout"] = {{"m_hh", g.config.layout.m_hh}, {"m_hl", g.config.layout.m_hl}, {"m_ll", g.config.layout.m_ll}};
   j["thresholds"] = {
      {"t_h", g.config.thresholds.t_h},
      {"t_l", g.config.thresholds.t_l},
      {"sample_rate", g.config.thresholds.sample_rate},
   };
   j["classifier"] = to_json(g.classifier);
   j["up_hh"] = to_json(g.up_hh);
   j["up_hl"] = to_json(g.up_hl);
   if (g.up_ll)
      j["up_ll"] = to_json(*g.up_ll);
   j["down_hl"] = to_json(g.down_hl);
   if (g.down_ll)
      j["down_ll"] = to_json(*g.down_ll);
   return j;
}

void save_file(const std::string& path, const std::string& bytes) {
   std::ofstream out(path, std::ios::binary);
   if (!out)
      throw io_error("cannot open " + path + " for writing");
   out.write(bytes.data(), (std::streamsize)bytes.size());
   if (!out)
      throw io_error("short write to " + path);
}

std::string load_file(const std::string& path) {
   std::ifstream in(path, std::ios::binary);
   if (!in)
      throw io_error("cannot open " + path);
   std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
   return bytes;
}

FermatSketch fermat_from_file(const std::string& path) {
   std::string bytes = load_file(path);
   if (bytes.size() >= 4) {
      uint32_t magic = 0;
      for (int i = 0; i < 4; ++i)
         magic |= (uint32_t)(uint8_t)bytes[i] << (8 * i);
      if (magic == kFermatMagic)
         return fermat_from_binary(bytes);
   }
   return fermat_from_json(nlohmann::json::parse(bytes, nullptr, true));
}

}  // namespace flowtel
