#include "doctest.h"

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "flowtel.h"

namespace {

constexpr uint64_t kPrime = 2305843009213693951ull;

struct Handle {
   flowtel_fermat_t* s = nullptr;
   ~Handle() { flowtel_fermat_destroy(s); }
};

std::string grab(char* p) {
   std::string out = p ? p : "";
   flowtel_free(p);
   return out;
}

}  // namespace

TEST_CASE("version and error names") {
   CHECK(flowtel_version() == 10000);
   CHECK(std::string(flowtel_error_name(FLOWTEL_OK)) == "ok");
   CHECK(std::string(flowtel_error_name(FLOWTEL_ERR_DECODE_INCOMPLETE)) == "decode incomplete");
   CHECK(std::string(flowtel_error_name(FLOWTEL_ERR_UNKNOWN_EXPERIMENT)) == "unknown experiment");
   CHECK(std::string(flowtel_error_name(42)) == "unknown error");
}

TEST_CASE("update and decode round-trip through the C interface") {
   Handle h;
   REQUIRE(flowtel_fermat_create(&h.s, 3, 64, 5, 0) == FLOWTEL_OK);
   for (uint64_t f = 1; f <= 20; ++f) {
      REQUIRE(flowtel_fermat_update(h.s, f, (int64_t)f) == FLOWTEL_OK);
   }
   REQUIRE(flowtel_fermat_insert(h.s, 7) == FLOWTEL_OK);

   uint64_t* flows = nullptr;
   int64_t* counts = nullptr;
   size_t n = 0;
   REQUIRE(flowtel_fermat_decode(h.s, &flows, &counts, &n) == FLOWTEL_OK);
   REQUIRE(n == 20);
   for (size_t i = 0; i < n; ++i) {
      CHECK(flows[i] == i + 1);
      CHECK(counts[i] == (int64_t)(i + 1) + (flows[i] == 7 ? 1 : 0));
   }
   flowtel_free(flows);
   flowtel_free(counts);
}

TEST_CASE("an overloaded sketch reports an incomplete decode") {
   Handle h;
   REQUIRE(flowtel_fermat_create(&h.s, 2, 8, 6, 0) == FLOWTEL_OK);
   for (uint64_t f = 1; f <= 100; ++f) REQUIRE(flowtel_fermat_update(h.s, f, 1) == FLOWTEL_OK);
   uint64_t* flows = nullptr;
   int64_t* counts = nullptr;
   size_t n = 0;
   CHECK(flowtel_fermat_decode(h.s, &flows, &counts, &n) == FLOWTEL_ERR_DECODE_INCOMPLETE);
   CHECK(flows != nullptr);
   CHECK(counts != nullptr);
   CHECK(n < 100);
   flowtel_free(flows);
   flowtel_free(counts);
}

TEST_CASE("creation and update argument checks") {
   CHECK(flowtel_fermat_create(nullptr, 3, 64, 1, 0) == FLOWTEL_ERR_NULL_POINTER);
   flowtel_fermat_t* s = nullptr;
   CHECK(flowtel_fermat_create(&s, 1, 64, 1, 0) == FLOWTEL_ERR_BAD_PARAMETER);
   CHECK(s == nullptr);
   CHECK(flowtel_fermat_create(&s, 3, 0, 1, 0) == FLOWTEL_ERR_BAD_PARAMETER);
   CHECK(flowtel_fermat_create(&s, 3, 64, 1, 32) == FLOWTEL_ERR_BAD_PARAMETER);
   CHECK(flowtel_fermat_update(nullptr, 1, 1) == FLOWTEL_ERR_NULL_POINTER);

   Handle h;
   REQUIRE(flowtel_fermat_create(&h.s, 3, 64, 1, 0) == FLOWTEL_OK);
   CHECK(flowtel_fermat_update(h.s, kPrime, 1) == FLOWTEL_ERR_ID_OUT_OF_RANGE);
   CHECK(flowtel_fermat_update(h.s, kPrime - 1, 1) == FLOWTEL_OK);
}

TEST_CASE("combine adds and subtracts, and rejects mismatches") {
   Handle a, b;
   REQUIRE(flowtel_fermat_create(&a.s, 3, 64, 11, 0) == FLOWTEL_OK);
   REQUIRE(flowtel_fermat_create(&b.s, 3, 64, 11, 0) == FLOWTEL_OK);
   flowtel_fermat_update(a.s, 1, 2);
   flowtel_fermat_update(a.s, 2, 3);
   flowtel_fermat_update(b.s, 2, 1);

   Handle sum;
   REQUIRE(flowtel_fermat_combine(&sum.s, a.s, b.s, 1) == FLOWTEL_OK);
   uint64_t* flows = nullptr;
   int64_t* counts = nullptr;
   size_t n = 0;
   REQUIRE(flowtel_fermat_decode(sum.s, &flows, &counts, &n) == FLOWTEL_OK);
   REQUIRE(n == 2);
   CHECK(counts[0] == 2);
   CHECK(counts[1] == 4);
   flowtel_free(flows);
   flowtel_free(counts);

   Handle diff;
   REQUIRE(flowtel_fermat_combine(&diff.s, sum.s, b.s, -1) == FLOWTEL_OK);
   Handle dup;
   CHECK(flowtel_fermat_combine(&dup.s, a.s, b.s, 2) == FLOWTEL_ERR_BAD_PARAMETER);
   Handle narrow;
   REQUIRE(flowtel_fermat_create(&narrow.s, 3, 32, 11, 0) == FLOWTEL_OK);
   Handle bad;
   CHECK(flowtel_fermat_combine(&bad.s, a.s, narrow.s, 1) == FLOWTEL_ERR_INCOMPATIBLE);
}

TEST_CASE("clones compare equal until they diverge") {
   Handle a;
   REQUIRE(flowtel_fermat_create(&a.s, 3, 64, 13, 8) == FLOWTEL_OK);
   flowtel_fermat_update(a.s, 9, 4);
   Handle c;
   REQUIRE(flowtel_fermat_clone(&c.s, a.s) == FLOWTEL_OK);
   int equal = 0;
   REQUIRE(flowtel_fermat_equal(a.s, c.s, &equal) == FLOWTEL_OK);
   CHECK(equal == 1);
   flowtel_fermat_update(c.s, 9, 1);
   REQUIRE(flowtel_fermat_equal(a.s, c.s, &equal) == FLOWTEL_OK);
   CHECK(equal == 0);
}

TEST_CASE("fold halves repeatedly and preserves the decoded content") {
   Handle a;
   REQUIRE(flowtel_fermat_create(&a.s, 3, 64, 17, 0) == FLOWTEL_OK);
   for (uint64_t f = 30; f < 35; ++f) flowtel_fermat_update(a.s, f, (int64_t)f);

   Handle folded;
   REQUIRE(flowtel_fermat_fold(&folded.s, a.s, 2) == FLOWTEL_OK);
   uint64_t* flows = nullptr;
   int64_t* counts = nullptr;
   size_t n = 0;
   REQUIRE(flowtel_fermat_decode(folded.s, &flows, &counts, &n) == FLOWTEL_OK);
   REQUIRE(n == 5);
   for (size_t i = 0; i < n; ++i) CHECK(counts[i] == (int64_t)flows[i]);
   flowtel_free(flows);
   flowtel_free(counts);

   Handle ten;
   REQUIRE(flowtel_fermat_create(&ten.s, 3, 10, 17, 0) == FLOWTEL_OK);
   Handle once;
   REQUIRE(flowtel_fermat_fold(&once.s, ten.s, 1) == FLOWTEL_OK);
   Handle twice;
   CHECK(flowtel_fermat_fold(&twice.s, ten.s, 2) == FLOWTEL_ERR_FOLD_INDIVISIBLE);
}

TEST_CASE("serialization crosses the boundary and rejects junk") {
   Handle a;
   REQUIRE(flowtel_fermat_create(&a.s, 3, 64, 19, 8) == FLOWTEL_OK);
   for (uint64_t f = 100; f < 140; ++f) flowtel_fermat_update(a.s, f, 3);

   uint8_t* bytes = nullptr;
   size_t len = 0;
   REQUIRE(flowtel_fermat_serialize(a.s, &bytes, &len) == FLOWTEL_OK);
   CHECK(len == 36 + 8 * 3 + 16 * 3 * 64);

   Handle back;
   REQUIRE(flowtel_fermat_deserialize(&back.s, bytes, len) == FLOWTEL_OK);
   int equal = 0;
   REQUIRE(flowtel_fermat_equal(a.s, back.s, &equal) == FLOWTEL_OK);
   CHECK(equal == 1);
   flowtel_free(bytes);

   const uint8_t junk[3] = {1, 2, 3};
   Handle bad;
   CHECK(flowtel_fermat_deserialize(&bad.s, junk, 3) == FLOWTEL_ERR_BAD_FORMAT);
}

TEST_CASE("file save and load round-trip with format sniffing") {
   Handle a;
   REQUIRE(flowtel_fermat_create(&a.s, 2, 32, 23, 0) == FLOWTEL_OK);
   flowtel_fermat_update(a.s, 42, 7);
   const char* path = "capi_roundtrip.bin";
   REQUIRE(flowtel_fermat_save(a.s, path) == FLOWTEL_OK);

   Handle back;
   REQUIRE(flowtel_fermat_load(&back.s, path) == FLOWTEL_OK);
   int equal = 0;
   REQUIRE(flowtel_fermat_equal(a.s, back.s, &equal) == FLOWTEL_OK);
   CHECK(equal == 1);

   char* report = nullptr;
   REQUIRE(flowtel_decode_file(path, &report) == FLOWTEL_OK);
   std::string text = grab(report);
   CHECK(text.find("\"status\": \"success\"") != std::string::npos);
   CHECK(text.find("\"42\": 7") != std::string::npos);

   Handle missing;
   CHECK(flowtel_fermat_load(&missing.s, "no-such-dir/absent.bin") == FLOWTEL_ERR_IO);
   CHECK(flowtel_fermat_save(a.s, "no-such-dir/absent.bin") == FLOWTEL_ERR_IO);
   std::remove(path);
}

TEST_CASE("linear counting estimates distinct flows") {
   Handle a;
   REQUIRE(flowtel_fermat_create(&a.s, 3, 256, 29, 0) == FLOWTEL_OK);
   for (uint64_t f = 1; f <= 30; ++f) flowtel_fermat_update(a.s, 1000 + f, 2);
   double estimate = 0.0;
   int saturated = -1;
   REQUIRE(flowtel_fermat_linear_count(a.s, &estimate, &saturated) == FLOWTEL_OK);
   CHECK(saturated == 0);
   CHECK(estimate > 20.0);
   CHECK(estimate < 42.0);
}

TEST_CASE("experiments run through the C interface") {
   char* result = nullptr;
   CHECK(flowtel_experiment_run("no-such-experiment", "{}", &result) == FLOWTEL_ERR_UNKNOWN_EXPERIMENT);
   CHECK(result == nullptr);
   CHECK(flowtel_experiment_run("threshold-sweep", "not json", &result) == FLOWTEL_ERR_BAD_FORMAT);

   const char* cfg = "{\"trials\": 3, \"flows\": 200, \"ratios\": [1.0, 2.0], \"seed\": 9}";
   REQUIRE(flowtel_experiment_run("threshold-sweep", cfg, &result) == FLOWTEL_OK);
   std::string doc = grab(result);
   CHECK(doc.find("\"experiment\": \"threshold-sweep\"") != std::string::npos);
   CHECK(doc.find("\"crossing_50pct\"") != std::string::npos);

   char* csv = nullptr;
   REQUIRE(flowtel_result_csv(doc.c_str(), &csv) == FLOWTEL_OK);
   std::string table = grab(csv);
   CHECK(table.rfind("buckets_per_flow,trial,seed,success\n", 0) == 0);
   size_t lines = 0;
   for (char ch : table)
      if (ch == '\n') ++lines;
   CHECK(lines == 1 + 2 * 3);

   CHECK(flowtel_result_csv("{\"experiment\": \"x\"}", &csv) == FLOWTEL_ERR_BAD_PARAMETER);
   CHECK(flowtel_result_csv("not json", &csv) == FLOWTEL_ERR_BAD_FORMAT);
}
