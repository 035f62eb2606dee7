#ifndef FLOWTEL_TOWER_HPP
#define FLOWTEL_TOWER_HPP

#include <cstdint>
#include <vector>

namespace flowtel {

struct TowerLevel {
   uint32_t width = 0;  // counters in this array
   uint32_t bits = 0;   // counter width; max value is the saturation mark
   uint64_t seed = 0;

   bool operator==(const TowerLevel&) const = default;
};

struct TowerConfig {
   std::vector<TowerLevel> levels;

   // Strictly growing counter widths and a constant width*bits budget
   // per level.
   void validate() const;

   // 32768 8-bit counters over 16384 16-bit counters.
   static TowerConfig two_level_default(uint64_t master_seed);

   bool operator==(const TowerConfig&) const = default;
};

class TowerSketch {
public:
   explicit TowerSketch(TowerConfig config);

   const TowerConfig& config() const { return config_; }

   void update(uint64_t f);

   struct Estimate {
      bool saturated = false;  // every mapped counter overflowed
      uint32_t value = 0;      // when saturated, the largest representable value
   };
   Estimate query(uint64_t f) const;

   // Single pass over the mapped slots: increment, then report the
   // post-insertion estimate.
   Estimate update_and_query(uint64_t f);

   uint32_t counter(size_t level, uint32_t slot) const { return arrays_[level][slot]; }
   void set_counter(size_t level, uint32_t slot, uint32_t v) { arrays_[level][slot] = v; }
   const std::vector<uint32_t>& level_array(size_t level) const { return arrays_[level]; }
   uint32_t saturation_value(size_t level) const;

   void clear();

   bool operator==(const TowerSketch&) const = default;

private:
   TowerConfig config_;
   std::vector<std::vector<uint32_t>> arrays_;
};

enum class Hierarchy : uint8_t {
   HHCandidate = 0,
   HLCandidate = 1,
   SampledLL = 2,
   NonSampledLL = 3,
};

const char* hierarchy_name(Hierarchy h);

struct ClassifierThresholds {
   uint32_t t_h = 1;
   uint32_t t_l = 1;
   double sample_rate = 1.0;
   uint64_t sample_seed = 0;

   void validate() const;
   bool operator==(const ClassifierThresholds&) const = default;
};

// Flow-consistent sampling verdict: shared seed and rate give the same
// answer for a flow at every switch.
bool sampled(uint64_t f, double rate, uint64_t seed);

// Three-way split on the post-insertion size estimate.
Hierarchy classify(const TowerSketch& t, uint64_t f, const ClassifierThresholds& th);

// Same split when the caller already holds the estimate.
Hierarchy classify_estimate(TowerSketch::Estimate est, uint64_t f, const ClassifierThresholds& th);

}  // namespace flowtel

#endif
