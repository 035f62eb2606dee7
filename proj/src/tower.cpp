#include "flowtel/tower.hpp"

#include <cmath>

#include "flowtel/errors.hpp"
#include "flowtel/hashing.hpp"

namespace flowtel {

void TowerConfig::validate() const {
   if (levels.empty())
      throw bad_parameter("tower needs at least one level");
   uint64_t budget = (uint64_t)levels[0].width * levels[0].bits;
   for (size_t i = 0; i < levels.size(); ++i) {
      const TowerLevel& lv = levels[i];
      if (lv.width == 0 || lv.bits == 0 || lv.bits > 31)
         throw bad_parameter("bad tower level shape");
      if ((uint64_t)lv.width * lv.bits != budget)
         throw bad_parameter("tower levels must share one memory budget");
      if (i > 0 && levels[i - 1].bits >= lv.bits)
         throw bad_parameter("counter widths must grow level to level");
   }
}

TowerConfig TowerConfig::two_level_default(uint64_t master_seed) {
   TowerConfig cfg;
   cfg.levels = {
      TowerLevel{32768, 8, derive_seed(master_seed, "tower-level", 0)},
      TowerLevel{16384, 16, derive_seed(master_seed, "tower-level", 1)},
   };
   return cfg;
}

TowerSketch::TowerSketch(TowerConfig config) : config_(std::move(config)) {
   config_.validate();
   arrays_.reserve(config_.levels.size());
   for (const TowerLevel& lv : config_.levels)
      arrays_.emplace_back(lv.width, 0u);
}

uint32_t TowerSketch::saturation_value(size_t level) const {
   return (uint32_t)((uint64_t(1) << config_.levels[level].bits) - 1);
}

void TowerSketch::update(uint64_t f) {
   for (size_t i = 0; i < arrays_.size(); ++i) {
      uint32_t slot = (uint32_t)(keyed_hash(f, config_.levels[i].seed) % config_.levels[i].width);
      uint32_t& c = arrays_[i][slot];
      if (c < saturation_value(i))
         ++c;
   }
}

TowerSketch::Estimate TowerSketch::query(uint64_t f) const {
   bool found = false;
   uint32_t best = 0;
   uint32_t top = 0;
   for (size_t i = 0; i < arrays_.size(); ++i) {
      uint32_t slot = (uint32_t)(keyed_hash(f, config_.levels[i].seed) % config_.levels[i].width);
      uint32_t v = arrays_[i][slot];
      uint32_t sat = saturation_value(i);
      top = sat > top ? sat : top;
      if (v >= sat)
         continue;  // overflowed, carries no information
      if (!found || v < best) {
         best = v;
         found = true;
      }
   }
   if (!found)
      return Estimate{true, top};
   return Estimate{false, best};
}

TowerSketch::Estimate TowerSketch::update_and_query(uint64_t f) {
   bool found = false;
   uint32_t best = 0;
   uint32_t top = 0;
   for (size_t i = 0; i < arrays_.size(); ++i) {
      uint32_t slot = (uint32_t)(keyed_hash(f, config_.levels[i].seed) % config_.levels[i].width);
      uint32_t& c = arrays_[i][slot];
      uint32_t sat = saturation_value(i);
      top = sat > top ? sat : top;
      if (c < sat)
         ++c;
      if (c >= sat)
         continue;
      if (!found || c < best) {
         best = c;
         found = true;
      }
   }
   if (!found)
      return Estimate{true, top};
   return Estimate{false, best};
}

void TowerSketch::clear() {
   for (auto& a : arrays_)
      std::fill(a.begin(), a.end(), 0u);
}

const char* hierarchy_name(Hierarchy h) {
   switch (h) {
   case Hierarchy::HHCandidate:
      return "hh";
   case Hierarchy::HLCandidate:
      return "hl";
   case Hierarchy::SampledLL:
      return "sampled-ll";
   case Hierarchy::NonSampledLL:
      return "non-sampled-ll";
   }
   return "?";
}

void ClassifierThresholds::validate() const {
   if (t_l < 1 || t_l > t_h)
      throw bad_parameter("thresholds need 1 <= t_l <= t_h");
   if (sample_rate < 0.0 || sample_rate > 1.0)
      throw bad_parameter("sample rate must lie in [0, 1]");
}

bool sampled(uint64_t f, double rate, uint64_t seed) {
   uint64_t cut = (uint64_t)std::ceil(65536.0 * rate);
   return (keyed_hash(f, seed) % 65536) < cut;
}

Hierarchy classify(const TowerSketch& t, uint64_t f, const ClassifierThresholds& th) {
   return classify_estimate(t.query(f), f, th);
}

Hierarchy classify_estimate(TowerSketch::Estimate est, uint64_t f, const ClassifierThresholds& th) {
   uint64_t size = est.saturated ? ~uint64_t(0) : est.value;
   if (size >= th.t_h)
      return Hierarchy::HHCandidate;
   if (size < th.t_l)
      return sampled(f, th.sample_rate, th.sample_seed) ? Hierarchy::SampledLL : Hierarchy::NonSampledLL;
   return Hierarchy::HLCandidate;
}

}  // namespace flowtel
