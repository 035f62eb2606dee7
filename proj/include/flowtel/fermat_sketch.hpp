#ifndef FLOWTEL_FERMAT_SKETCH_HPP
#define FLOWTEL_FERMAT_SKETCH_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "flowtel/modmath.hpp"

namespace flowtel {

struct FermatParams {
   uint32_t d = 3;
   uint32_t m = 0;
   uint64_t p = kDefaultPrime;
   std::vector<uint64_t> seeds;  // one per array
   uint32_t fingerprint_bits = 0;
   uint64_t fingerprint_seed = 0;

   // Checks primality of p, d >= 2, m >= 1 and pairwise distinct seeds.
   void validate() const;

   static FermatParams make(uint32_t d, uint32_t m, uint64_t master_seed, uint64_t p = kDefaultPrime,
                            uint32_t fingerprint_bits = 0);

   bool operator==(const FermatParams&) const = default;
};

struct FermatBucket {
   int64_t count = 0;
   uint64_t idsum = 0;

   bool is_zero() const { return count == 0 && idsum == 0; }
   bool operator==(const FermatBucket&) const = default;
};

// Signed multiset of flows. Ordered map so iteration and serialization
// are deterministic.
struct Flowset {
   std::map<uint64_t, int64_t> entries;

   // Accumulates n onto f, erasing the entry when the sum reaches zero.
   // Returns the previous frequency (0 when absent).
   int64_t add(uint64_t f, int64_t n);

   bool contains(uint64_t f) const { return entries.count(f) != 0; }
   int64_t get(uint64_t f) const;
   size_t size() const { return entries.size(); }
   bool empty() const { return entries.empty(); }
   bool operator==(const Flowset&) const = default;
};

enum class DecodeStatus { Success, Failure };

struct DecodeOutcome {
   DecodeStatus status = DecodeStatus::Failure;
   Flowset flowset;
   uint64_t residual_nonzero_buckets = 0;
   std::vector<std::pair<uint64_t, int64_t>> blocklist_events;
   uint64_t pop_iterations = 0;

   bool ok() const { return status == DecodeStatus::Success; }
};

class FermatSketch {
public:
   explicit FermatSketch(FermatParams params);

   const FermatParams& params() const { return params_; }
   uint32_t d() const { return params_.d; }
   uint32_t m() const { return params_.m; }
   uint64_t p() const { return params_.p; }

   const FermatBucket& bucket(uint32_t i, uint32_t j) const { return grid_[i * params_.m + j]; }
   FermatBucket& bucket(uint32_t i, uint32_t j) { return grid_[i * params_.m + j]; }

   // Bucket index of flow f in array i. Hashes the extended ID when
   // fingerprinting is on.
   uint32_t index(uint32_t i, uint64_t f) const;

   void update(uint64_t f, int64_t n);
   void insert(uint64_t f) { update(f, 1); }

   // Elementwise a + sign*b. Parameters must match exactly.
   static FermatSketch combine(const FermatSketch& a, const FermatSketch& b, int sign);

   // Sums groups of k columns into a sketch with m/k buckets per array.
   FermatSketch fold(uint32_t k) const;

   // Attempts single-flow recovery from bucket (i, j). Returns the flow and
   // its signed frequency, or nothing if the bucket fails verification.
   std::optional<std::pair<uint64_t, int64_t>> is_pure(uint32_t i, uint32_t j, const Flowset& blocklist) const;

   DecodeOutcome decode() const;

   size_t nonzero_buckets() const;
   bool all_zero() const { return nonzero_buckets() == 0; }

   bool compatible_with(const FermatSketch& other) const { return params_ == other.params_; }
   bool operator==(const FermatSketch&) const = default;

private:
   uint64_t extended_id(uint64_t f) const;
   uint64_t fingerprint_of(uint64_t f) const;

   FermatParams params_;
   std::vector<FermatBucket> grid_;  // d arrays of m, row-major
};

struct LinearCountResult {
   bool saturated = false;  // no zero entries left, estimate is a floor
   int64_t estimate = 0;
};

// Cardinality from the fraction of empty cells: -total * ln(z / total).
LinearCountResult linear_count(size_t zero_entries, size_t total);

// Zero-bucket count of one array of a sketch, for the linear-counting
// fallback on an undecodable delta.
LinearCountResult linear_count_array(const FermatSketch& s, uint32_t array_index);

}  // namespace flowtel

#endif
