#ifndef FLOWTEL_CONTROLLER_HPP
#define FLOWTEL_CONTROLLER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowtel/edge_switch.hpp"
#include "flowtel/fermat_sketch.hpp"
#include "flowtel/mrac.hpp"

#include "json.hpp"

namespace flowtel {

enum class Mode : uint8_t { Healthy = 0, Ill = 1 };

const char* mode_name(Mode m);

enum class DeltaStatus : uint8_t { Success = 0, Failure = 1, Absent = 2 };

const char* delta_status_name(DeltaStatus s);

// Per-flow packet losses for one epoch, from the difference between what
// entered the network and what left it.
struct LossReport {
   bool usable = false;  // false when any per-switch HH decode failed
   DeltaStatus hl_status = DeltaStatus::Absent;
   DeltaStatus ll_status = DeltaStatus::Absent;
   Flowset hl_losses;
   Flowset ll_losses;
   // Victim-count fallbacks when a delta decode fails.
   int64_t hl_victim_estimate = 0;
   bool hl_estimate_saturated = false;
   int64_t ll_victim_estimate = 0;
   bool ll_estimate_saturated = false;

   // Union of both parts: flow -> lost packets.
   Flowset combined() const;
   // Flows that lost packets only from the sampled light class.
   std::vector<uint64_t> light_only_flows() const;
};

struct SwitchAnalysis {
   uint32_t switch_id = 0;
   int64_t flow_count = 0;  // linear counting over the widest tower level
   bool flow_count_saturated = false;
   bool hh_ok = false;
   Flowset hh;  // flow -> count above the heavy threshold
   double hh_load = 0.0;
   FsdEstimate fsd;
};

struct EpochAnalysis {
   uint64_t epoch_index = 0;
   uint64_t generation = 0;
   bool stale = false;  // older than the most recently staged config
   Mode mode = Mode::Healthy;
   std::vector<SwitchAnalysis> switches;
   bool hh_all_ok = false;
   LossReport losses;
   double hl_load = 0.0;
   double ll_load = 0.0;
   // Victim statistics, reconstructed via the sampled light flows when ill.
   double victim_count = 0.0;
   FsdEstimate victim_fsd;
};

// Network-wide measurement products for one epoch.
struct TaskResults {
   std::map<uint64_t, int64_t> hh_sizes;        // every decoded heavy flow
   std::map<uint64_t, int64_t> heavy_hitters;   // flows above the report threshold
   std::map<uint64_t, int64_t> heavy_changes;   // flow -> |size difference|
   int64_t cardinality = 0;
   FsdEstimate fsd;
   double entropy = 0.0;
};

struct ControllerConfig {
   double target_load = 0.70;
   double low_load = 0.60;
   uint32_t reserve_hl = 512;
   EncoderLayout ill_layout{1024, 2560, 512};
   int64_t heavy_report_delta = 500;
   int64_t heavy_change_delta = 250;
};

// Smallest threshold t such that the flows of size >= t fit in
// `capacity` slots, per the given size histogram.
uint32_t choose_threshold(const FsdEstimate& fsd, double capacity);

// Epoch loss detection over the frozen groups of every switch, all from
// the same epoch. Decodes the per-switch heavy flowsets, folds them back
// into the upstream encoders, and diffs against the downstream side.
LossReport detect_losses(const std::vector<SketchGroup>& groups);

// Accumulated per-epoch tasks; `prev_groups` supplies the previous
// epoch's sketches for heavy-change detection (null for the first epoch).
TaskResults accumulation_tasks(const std::vector<SketchGroup>& groups, const ControllerConfig& cfg,
                               const std::vector<SketchGroup>* prev_groups);

class Controller {
  public:
   Controller(ControllerConfig cfg, uint32_t m_uf, uint32_t m_df, uint32_t d);

   Mode mode() const { return mode_; }
   void set_mode(Mode m) { mode_ = m; }

   struct Decision {
      EpochAnalysis analysis;
      TaskResults tasks;
      // switch id -> staged config; empty when nothing changes.
      std::map<uint32_t, StagedConfig> staged;
      nlohmann::json record;
   };

   // Analyzes one epoch's frozen groups, runs the measurement tasks and
   // decides the next configuration. Decisions for epochs older than the
   // most recently staged config are suppressed so one condition is not
   // reacted to twice while its fix is still propagating.
   Decision process_epoch(const std::vector<SketchGroup>& groups);

   EpochAnalysis analyze(const std::vector<SketchGroup>& groups) const;

  private:
   std::map<uint32_t, StagedConfig> decide(const EpochAnalysis& a, const std::vector<SketchGroup>& groups);
   void decide_healthy(const EpochAnalysis& a, const std::vector<SketchGroup>& groups,
                       std::map<uint32_t, ClassifierThresholds>& th, EncoderLayout& layout, bool& layout_changed);
   void decide_ill(const EpochAnalysis& a, const std::vector<SketchGroup>& groups,
                   std::map<uint32_t, ClassifierThresholds>& th, EncoderLayout& layout, bool& layout_changed);
   void trim_heavy_band(const EpochAnalysis& a, uint32_t m_hh, std::map<uint32_t, ClassifierThresholds>& th) const;

   ControllerConfig cfg_;
   uint32_t m_uf_;
   uint32_t m_df_;
   uint32_t d_;
   Mode mode_ = Mode::Healthy;
   uint64_t last_staged_generation_ = 0;
   std::vector<SketchGroup> prev_groups_;
};

}  // namespace flowtel

#endif
