#include "flowtel/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "flowtel/errors.hpp"
#include "flowtel/hashing.hpp"

namespace flowtel {

std::vector<TraceRow> parse_trace_csv(std::istream& in) {
   std::vector<TraceRow> rows;
   std::string line;
   while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.size() < 2) throw bad_format("trace row needs flow_id,packets");
      if (!fields[0].empty() && !std::isdigit(static_cast<unsigned char>(fields[0][0]))) continue;
      TraceRow row;
      try {
         row.flow = std::stoull(fields[0]);
         row.packets = std::stoull(fields[1]);
         if (fields.size() >= 4) {
            row.ingress = static_cast<int32_t>(std::stol(fields[2]));
            row.egress = static_cast<int32_t>(std::stol(fields[3]));
         }
      } catch (const std::exception&) {
         throw bad_format("bad trace field in: " + line);
      }
      rows.push_back(row);
   }
   return rows;
}

std::vector<TraceRow> load_trace_csv(const std::string& path) {
   std::ifstream in(path);
   if (!in) throw io_error("cannot open trace: " + path);
   return parse_trace_csv(in);
}

std::map<uint64_t, int64_t> EpochTruth::expected_losses() const {
   std::map<uint64_t, int64_t> out;
   for (const auto& [f, t] : flows) {
      int64_t n = static_cast<int64_t>(t.dropped_tracked + t.dropped_sampled);
      if (n != 0) out[f] = n;
   }
   return out;
}

std::map<uint64_t, int64_t> EpochTruth::expected_tracked_losses() const {
   std::map<uint64_t, int64_t> out;
   for (const auto& [f, t] : flows)
      if (t.dropped_tracked != 0) out[f] = static_cast<int64_t>(t.dropped_tracked);
   return out;
}

std::map<uint64_t, int64_t> EpochTruth::expected_sampled_losses() const {
   std::map<uint64_t, int64_t> out;
   for (const auto& [f, t] : flows)
      if (t.dropped_sampled != 0) out[f] = static_cast<int64_t>(t.dropped_sampled);
   return out;
}

bool EpochTruth::conserved() const {
   if (generated != delivered + dropped) return false;
   for (const auto& [f, t] : flows) {
      (void)f;
      if (t.generated != t.delivered + t.dropped) return false;
      if (t.dropped != t.dropped_tracked + t.dropped_sampled + t.dropped_unsampled) return false;
   }
   return true;
}

OracleDiff diff_losses(const std::map<uint64_t, int64_t>& expected, const Flowset& reported) {
   OracleDiff d;
   for (const auto& [f, n] : expected) {
      if (!reported.contains(f))
         ++d.missing;
      else if (reported.get(f) != n)
         ++d.wrong_value;
   }
   for (const auto& [f, n] : reported.entries) {
      (void)n;
      if (expected.find(f) == expected.end()) ++d.extra;
   }
   d.exact = d.missing == 0 && d.extra == 0 && d.wrong_value == 0;
   return d;
}

SimNet::SimNet(const SwitchConfig& base, uint32_t n_switches) : master_seed_(base.master_seed) {
   if (n_switches < 2) throw bad_parameter("need at least two switches");
   base.validate();
   switches_.reserve(n_switches);
   for (uint32_t i = 0; i < n_switches; ++i) switches_.emplace_back(i, base);
}

std::vector<FlowPlan> SimNet::plan_epoch(uint64_t epoch) const {
   uint64_t p = switches_.front().active_config().p;
   uint64_t id_seed = derive_seed(master_seed_, "sim-flow-id", 0);
   uint64_t place_seed = derive_seed(master_seed_, "sim-place", 0);
   uint64_t pair_seed = derive_seed(master_seed_, "sim-place", 1);
   uint64_t size_seed =
       derive_seed(master_seed_, "sim-size", workload_.per_epoch_sizes ? epoch : 0);
   uint32_t n_sw = n_switches();

   size_t n = workload_.model == WorkloadSpec::SizeModel::Trace ? workload_.trace.size()
                                                                : static_cast<size_t>(workload_.n_flows);
   std::vector<FlowPlan> plan;
   plan.reserve(n);

   double zipf_scale = 0.0;
   if (workload_.model == WorkloadSpec::SizeModel::Zipf) {
      double h = 0.0;
      for (size_t r = 1; r <= n; ++r) h += std::pow(static_cast<double>(r), -workload_.zipf_exponent);
      zipf_scale = h > 0.0 ? static_cast<double>(workload_.total_packets) / h : 0.0;
   }

   for (size_t i = 0; i < n; ++i) {
      FlowPlan f;
      if (workload_.model == WorkloadSpec::SizeModel::Trace) {
         const TraceRow& row = workload_.trace[i];
         f.id = row.flow;
         f.packets = row.packets;
         if (row.ingress >= 0 && row.egress >= 0 && row.ingress != row.egress) {
            f.ingress = static_cast<uint32_t>(row.ingress) % n_sw;
            f.egress = static_cast<uint32_t>(row.egress) % n_sw;
            if (f.ingress == f.egress) f.egress = (f.egress + 1) % n_sw;
         } else {
            f.ingress = static_cast<uint32_t>(keyed_hash(f.id, place_seed) % n_sw);
            f.egress = (f.ingress + 1 + static_cast<uint32_t>(keyed_hash(f.id, pair_seed) % (n_sw - 1))) % n_sw;
         }
      } else {
         f.id = 1 + keyed_hash(i, id_seed) % std::min(p - 1, (uint64_t(1) << 52) - 1);
         f.ingress = static_cast<uint32_t>(keyed_hash(i, place_seed) % n_sw);
         f.egress = (f.ingress + 1 + static_cast<uint32_t>(keyed_hash(i, pair_seed) % (n_sw - 1))) % n_sw;
         switch (workload_.model) {
            case WorkloadSpec::SizeModel::Zipf: {
               double raw = zipf_scale / std::pow(static_cast<double>(i + 1), workload_.zipf_exponent);
               f.packets = std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(raw)));
               break;
            }
            case WorkloadSpec::SizeModel::Uniform: {
               uint64_t lo = std::max<uint64_t>(1, workload_.min_size);
               uint64_t hi = std::max(lo, workload_.max_size);
               f.packets = lo + keyed_hash(i, size_seed) % (hi - lo + 1);
               break;
            }
            default: f.packets = std::max<uint64_t>(1, workload_.fixed_size); break;
         }
      }
      plan.push_back(f);
   }

   if (loss_.victim_ratio > 0.0 && loss_.drop_rate > 0.0 && !plan.empty()) {
      uint64_t victim_seed =
          derive_seed(master_seed_, "sim-victim", loss_.per_epoch_victims ? epoch : 0);
      size_t k = static_cast<size_t>(std::ceil(loss_.victim_ratio * static_cast<double>(plan.size())));
      k = std::min(k, plan.size());
      if (k > 0) {
         std::vector<std::pair<uint64_t, size_t>> ranked;
         ranked.reserve(plan.size());
         for (size_t i = 0; i < plan.size(); ++i) ranked.emplace_back(keyed_hash(plan[i].id, victim_seed), i);
         std::nth_element(ranked.begin(), ranked.begin() + (k - 1), ranked.end());
         for (size_t i = 0; i < k; ++i) plan[ranked[i].second].drop_rate = loss_.drop_rate;
      }
   }
   if (loss_.link_failure) {
      for (auto& f : plan)
         if (f.ingress == loss_.fail_ingress % n_sw && f.egress == loss_.fail_egress % n_sw)
            f.drop_rate = std::max(f.drop_rate, loss_.fail_drop_rate);
   }
   return plan;
}

EpochTruth SimNet::run_epoch() {
   auto plan = plan_epoch(epoch_);
   uint64_t drop_seed = derive_seed(master_seed_, "sim-drop", epoch_);

   EpochTruth t;
   t.epoch_index = epoch_;
   for (const auto& f : plan) {
      FlowTruth& ft = t.flows[f.id];
      uint64_t drop_cut = f.drop_rate >= 1.0 ? ~0ull : static_cast<uint64_t>(f.drop_rate * 9007199254740992.0);
      for (uint64_t j = 0; j < f.packets; ++j) {
         TaggedPacket pkt = switches_[f.ingress].process_ingress(f.id, f.egress);
         ++ft.generated;
         ++t.generated;
         bool drop = false;
         if (f.drop_rate > 0.0) {
            uint64_t h = keyed_hash(f.id ^ mix64(j + 0x517cc1b727220a95ull), drop_seed);
            drop = f.drop_rate >= 1.0 || (h >> 11) < drop_cut;
         }
         if (drop) {
            ++ft.dropped;
            ++t.dropped;
            switch (pkt.hierarchy) {
               case Hierarchy::HHCandidate:
               case Hierarchy::HLCandidate: ++ft.dropped_tracked; break;
               case Hierarchy::SampledLL: ++ft.dropped_sampled; break;
               case Hierarchy::NonSampledLL: ++ft.dropped_unsampled; break;
            }
         } else {
            switches_[f.egress].process_egress(pkt);
            ++ft.delivered;
            ++t.delivered;
         }
      }
   }
   return t;
}

std::vector<SketchGroup> SimNet::rotate_all() {
   std::vector<SketchGroup> out;
   out.reserve(switches_.size());
   for (auto& s : switches_) out.push_back(s.rotate_epoch());
   ++epoch_;
   return out;
}

void SimNet::stage_all(const std::map<uint32_t, StagedConfig>& staged) {
   for (const auto& [id, s] : staged) switches_.at(id).stage_reconfig(s.layout, s.thresholds);
}

void SimNet::apply_staged_all() {
   for (auto& s : switches_)
      if (s.has_staged()) s.apply_staged_to_idle();
}

}  // namespace flowtel
