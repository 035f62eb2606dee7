#ifndef FLOWTEL_SIMNET_HPP
#define FLOWTEL_SIMNET_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "flowtel/edge_switch.hpp"

namespace flowtel {

struct TraceRow {
   uint64_t flow = 0;
   uint64_t packets = 0;
   int32_t ingress = -1;  // -1 derives placement from the flow id
   int32_t egress = -1;
};

// Reads `flow_id,packets[,ingress,egress]` rows; '#' lines and a header
// row are skipped.
std::vector<TraceRow> parse_trace_csv(std::istream& in);
std::vector<TraceRow> load_trace_csv(const std::string& path);

struct WorkloadSpec {
   enum class SizeModel : uint8_t { Zipf = 0, Uniform = 1, Fixed = 2, Trace = 3 };

   uint64_t n_flows = 10000;
   SizeModel model = SizeModel::Zipf;
   double zipf_exponent = 1.0;
   uint64_t total_packets = 100000;  // Zipf sizes are scaled to this budget
   uint64_t min_size = 1;            // Uniform bounds
   uint64_t max_size = 100;
   uint64_t fixed_size = 100;
   bool per_epoch_sizes = false;  // redraw Uniform sizes each epoch
   std::vector<TraceRow> trace;
};

struct LossSpec {
   double victim_ratio = 0.0;  // share of flows that lose packets
   double drop_rate = 0.0;     // per-packet loss probability for victims
   bool per_epoch_victims = false;
   bool link_failure = false;  // drop on one ingress/egress pair
   uint32_t fail_ingress = 0;
   uint32_t fail_egress = 1;
   double fail_drop_rate = 1.0;
};

struct FlowPlan {
   uint64_t id = 0;
   uint64_t packets = 0;
   uint32_t ingress = 0;
   uint32_t egress = 0;
   double drop_rate = 0.0;
};

struct FlowTruth {
   uint64_t generated = 0;
   uint64_t delivered = 0;
   uint64_t dropped = 0;
   // Drops split by the hierarchy tag each packet carried at ingress.
   uint64_t dropped_tracked = 0;     // heavy or mid class
   uint64_t dropped_sampled = 0;     // sampled light class
   uint64_t dropped_unsampled = 0;   // unsampled light class
};

struct EpochTruth {
   uint64_t epoch_index = 0;
   uint64_t generated = 0;
   uint64_t delivered = 0;
   uint64_t dropped = 0;
   std::map<uint64_t, FlowTruth> flows;

   // Per-flow losses the encoders are accountable for: packets that were
   // tagged into the tracked classes or the sampled light class.
   std::map<uint64_t, int64_t> expected_losses() const;
   std::map<uint64_t, int64_t> expected_tracked_losses() const;
   std::map<uint64_t, int64_t> expected_sampled_losses() const;
   bool conserved() const;
};

struct OracleDiff {
   bool exact = true;
   uint64_t missing = 0;  // expected but not reported
   uint64_t extra = 0;    // reported but not expected
   uint64_t wrong_value = 0;
};

OracleDiff diff_losses(const std::map<uint64_t, int64_t>& expected, const Flowset& reported);

// Deterministic multi-switch packet source. Every choice (flow ids,
// placement, sizes, victims, per-packet drops) is a keyed hash of the
// master seed, so runs replay exactly.
class SimNet {
  public:
   SimNet(const SwitchConfig& base, uint32_t n_switches);

   uint32_t n_switches() const { return static_cast<uint32_t>(switches_.size()); }
   EdgeSwitch& at(uint32_t i) { return switches_.at(i); }
   const EdgeSwitch& at(uint32_t i) const { return switches_.at(i); }
   uint64_t epoch_index() const { return epoch_; }

   void set_workload(const WorkloadSpec& w) { workload_ = w; }
   void set_loss(const LossSpec& l) { loss_ = l; }
   const WorkloadSpec& workload() const { return workload_; }

   std::vector<FlowPlan> plan_epoch(uint64_t epoch) const;

   // Feeds one epoch of traffic through every switch and advances the
   // epoch counter. Ground truth covers every packet of the epoch.
   EpochTruth run_epoch();

   // Freezes and clears the just-filled group on every switch.
   std::vector<SketchGroup> rotate_all();
   void stage_all(const std::map<uint32_t, StagedConfig>& staged);
   void apply_staged_all();

  private:
   std::vector<EdgeSwitch> switches_;
   WorkloadSpec workload_;
   LossSpec loss_;
   uint64_t master_seed_;
   uint64_t epoch_ = 0;
};

}  // namespace flowtel

#endif
