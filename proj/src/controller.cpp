#include "flowtel/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "flowtel/errors.hpp"

namespace flowtel {

const char* mode_name(Mode m) { return m == Mode::Healthy ? "healthy" : "ill"; }

const char* delta_status_name(DeltaStatus s) {
   switch (s) {
      case DeltaStatus::Success: return "success";
      case DeltaStatus::Failure: return "failure";
      default: return "absent";
   }
}

Flowset LossReport::combined() const {
   Flowset out = hl_losses;
   for (const auto& [f, n] : ll_losses.entries) out.add(f, n);
   return out;
}

std::vector<uint64_t> LossReport::light_only_flows() const {
   std::vector<uint64_t> out;
   for (const auto& [f, n] : ll_losses.entries) {
      (void)n;
      if (!hl_losses.contains(f)) out.push_back(f);
   }
   return out;
}

uint32_t choose_threshold(const FsdEstimate& fsd, double capacity) {
   if (fsd.ns.empty()) return 1;
   if (capacity < 0.0) capacity = 0.0;
   const double eps = 1e-9;
   double tail = fsd.total();
   if (tail <= capacity + eps) return 1;
   uint32_t t = 1;
   for (const auto& [size, count] : fsd.ns) {
      tail -= count;
      t = size + 1;
      if (tail <= capacity + eps) break;
   }
   return t;
}

namespace {

double minimum_rate(uint32_t /*m_ll*/) { return 1.0 / 65536.0; }

// Averaging the per-array estimates instead of reading one array keeps the
// resize targets derived from it inside the load band at small part sizes.
LinearCountResult sketch_linear_count(const FermatSketch& s) {
   double sum = 0.0;
   uint32_t live = 0;
   for (uint32_t i = 0; i < s.params().d; ++i) {
      auto lc = linear_count_array(s, i);
      if (lc.saturated) continue;
      sum += static_cast<double>(lc.estimate);
      ++live;
   }
   if (live == 0) return LinearCountResult{true, static_cast<int64_t>(s.m())};
   return LinearCountResult{false, static_cast<int64_t>(std::llround(sum / live))};
}

int64_t widest_level_count(const SketchGroup& g, bool& saturated) {
   const auto& levels = g.classifier.config().levels;
   size_t last = levels.size() - 1;
   const auto& arr = g.classifier.level_array(last);
   uint64_t zeros = 0;
   for (uint32_t v : arr)
      if (v == 0) ++zeros;
   auto lc = linear_count(zeros, arr.size());
   saturated = lc.saturated;
   return lc.estimate;
}

std::map<uint64_t, int64_t> merged_hh_sizes(const std::vector<SketchGroup>& groups) {
   std::map<uint64_t, int64_t> sizes;
   for (const auto& g : groups) {
      auto out = g.up_hh.decode();
      if (!out.ok()) continue;
      int64_t t_h = g.config.thresholds.t_h;
      for (const auto& [f, q] : out.flowset.entries) {
         int64_t size = t_h + q - 1;
         auto it = sizes.find(f);
         if (it == sizes.end() || it->second < size) sizes[f] = size;
      }
   }
   return sizes;
}

int64_t tower_size(const std::vector<SketchGroup>& groups, uint64_t flow) {
   int64_t best = 0;
   for (const auto& g : groups) {
      auto est = g.classifier.query(flow);
      best = std::max(best, static_cast<int64_t>(est.value));
   }
   return best;
}

int64_t size_query(const std::vector<SketchGroup>& groups, const std::map<uint64_t, int64_t>& hh_sizes,
                   uint64_t flow) {
   auto it = hh_sizes.find(flow);
   if (it != hh_sizes.end()) return it->second;
   return tower_size(groups, flow);
}

}  // namespace

LossReport detect_losses(const std::vector<SketchGroup>& groups) {
   LossReport r;
   if (groups.empty()) return r;

   std::vector<Flowset> hhs;
   hhs.reserve(groups.size());
   for (const auto& g : groups) {
      auto out = g.up_hh.decode();
      if (!out.ok()) return r;
      hhs.push_back(std::move(out.flowset));
   }
   r.usable = true;

   auto accumulate_hl = [&](bool upstream) {
      FermatSketch acc = upstream ? groups[0].up_hl : groups[0].down_hl;
      if (upstream)
         for (const auto& [f, q] : hhs[0].entries) acc.update(f, q);
      for (size_t k = 1; k < groups.size(); ++k) {
         FermatSketch part = upstream ? groups[k].up_hl : groups[k].down_hl;
         if (upstream)
            for (const auto& [f, q] : hhs[k].entries) part.update(f, q);
         acc = FermatSketch::combine(acc, part, +1);
      }
      return acc;
   };

   FermatSketch delta_hl = FermatSketch::combine(accumulate_hl(true), accumulate_hl(false), -1);
   auto hl_out = delta_hl.decode();
   if (hl_out.status == DecodeStatus::Success) {
      r.hl_status = DeltaStatus::Success;
      r.hl_losses = std::move(hl_out.flowset);
   } else {
      r.hl_status = DeltaStatus::Failure;
      auto lc = sketch_linear_count(delta_hl);
      r.hl_victim_estimate = lc.estimate;
      r.hl_estimate_saturated = lc.saturated;
   }

   if (groups[0].up_ll.has_value() && groups[0].down_ll.has_value()) {
      FermatSketch up = *groups[0].up_ll;
      FermatSketch down = *groups[0].down_ll;
      for (size_t k = 1; k < groups.size(); ++k) {
         up = FermatSketch::combine(up, *groups[k].up_ll, +1);
         down = FermatSketch::combine(down, *groups[k].down_ll, +1);
      }
      FermatSketch delta_ll = FermatSketch::combine(up, down, -1);
      auto ll_out = delta_ll.decode();
      if (ll_out.status == DecodeStatus::Success) {
         r.ll_status = DeltaStatus::Success;
         r.ll_losses = std::move(ll_out.flowset);
      } else {
         r.ll_status = DeltaStatus::Failure;
         auto lc = sketch_linear_count(delta_ll);
         r.ll_victim_estimate = lc.estimate;
         r.ll_estimate_saturated = lc.saturated;
      }
   }
   return r;
}

TaskResults accumulation_tasks(const std::vector<SketchGroup>& groups, const ControllerConfig& cfg,
                               const std::vector<SketchGroup>* prev_groups) {
   TaskResults t;
   if (groups.empty()) return t;

   t.hh_sizes = merged_hh_sizes(groups);
   for (const auto& [f, size] : t.hh_sizes)
      if (size > cfg.heavy_report_delta) t.heavy_hitters[f] = size;

   for (const auto& g : groups) {
      bool saturated = false;
      t.cardinality += widest_level_count(g, saturated);
      auto out = g.up_hh.decode();
      Flowset hh = out.ok() ? out.flowset : Flowset{};
      t.fsd.merge(estimate_fsd(g.classifier, hh, g.config.thresholds.t_h));
   }
   t.entropy = fsd_entropy(t.fsd);

   if (prev_groups != nullptr && !prev_groups->empty()) {
      auto prev_sizes = merged_hh_sizes(*prev_groups);
      std::map<uint64_t, bool> candidates;
      for (const auto& [f, s] : t.hh_sizes) {
         (void)s;
         candidates[f] = true;
      }
      for (const auto& [f, s] : prev_sizes) {
         (void)s;
         candidates[f] = true;
      }
      for (const auto& [f, unused] : candidates) {
         (void)unused;
         int64_t now = size_query(groups, t.hh_sizes, f);
         int64_t before = size_query(*prev_groups, prev_sizes, f);
         int64_t diff = now > before ? now - before : before - now;
         if (diff > cfg.heavy_change_delta) t.heavy_changes[f] = diff;
      }
   }
   return t;
}

Controller::Controller(ControllerConfig cfg, uint32_t m_uf, uint32_t m_df, uint32_t d)
    : cfg_(cfg), m_uf_(m_uf), m_df_(m_df), d_(d) {
   if (m_df == 0 || m_uf <= m_df || d == 0) throw bad_parameter("controller memory shape");
   cfg_.ill_layout.validate(m_uf, m_df);
}

EpochAnalysis Controller::analyze(const std::vector<SketchGroup>& groups) const {
   EpochAnalysis a;
   a.mode = mode_;
   if (groups.empty()) return a;
   a.epoch_index = groups[0].epoch_index;
   a.generation = groups[0].config.generation;
   for (const auto& g : groups) a.generation = std::min(a.generation, g.config.generation);

   const auto& layout = groups[0].config.layout;
   std::map<uint64_t, int64_t> hh_sizes;
   a.hh_all_ok = true;
   for (const auto& g : groups) {
      SwitchAnalysis s;
      s.switch_id = g.switch_id;
      s.flow_count = widest_level_count(g, s.flow_count_saturated);
      auto out = g.up_hh.decode();
      s.hh_ok = out.ok();
      if (s.hh_ok) {
         s.hh = std::move(out.flowset);
         s.hh_load = static_cast<double>(s.hh.size()) / (static_cast<double>(layout.m_hh) * g.config.d);
         int64_t t_h = g.config.thresholds.t_h;
         for (const auto& [f, q] : s.hh.entries) {
            int64_t size = t_h + q - 1;
            auto it = hh_sizes.find(f);
            if (it == hh_sizes.end() || it->second < size) hh_sizes[f] = size;
         }
      } else {
         a.hh_all_ok = false;
      }
      s.fsd = estimate_fsd(g.classifier, s.hh, g.config.thresholds.t_h);
      a.switches.push_back(std::move(s));
   }

   if (!a.hh_all_ok) return a;

   a.losses = detect_losses(groups);
   double hl_slots = static_cast<double>(layout.m_hl) * groups[0].config.d;
   double ll_slots = static_cast<double>(layout.m_ll) * groups[0].config.d;
   if (a.losses.hl_status == DeltaStatus::Success)
      a.hl_load = static_cast<double>(a.losses.hl_losses.size()) / hl_slots;
   if (a.losses.ll_status == DeltaStatus::Success && ll_slots > 0.0)
      a.ll_load = static_cast<double>(a.losses.ll_losses.size()) / ll_slots;

   const auto& th = groups[0].config.thresholds;
   if (mode_ == Mode::Healthy) {
      if (a.losses.hl_status == DeltaStatus::Success)
         a.victim_count = static_cast<double>(a.losses.hl_losses.size());
      else
         a.victim_count = static_cast<double>(a.losses.hl_victim_estimate);
   } else {
      double rate = th.sample_rate > 0.0 ? th.sample_rate : 1.0;
      if (a.losses.ll_status == DeltaStatus::Success) {
         std::vector<uint64_t> sampled_victims;
         if (a.losses.hl_status == DeltaStatus::Success) {
            for (const auto& [f, n] : a.losses.hl_losses.entries) {
               (void)n;
               if (sampled(f, th.sample_rate, th.sample_seed)) sampled_victims.push_back(f);
            }
         }
         for (const auto& [f, n] : a.losses.ll_losses.entries) {
            (void)n;
            sampled_victims.push_back(f);
         }
         for (uint64_t f : sampled_victims) {
            int64_t size = size_query(groups, hh_sizes, f);
            uint32_t clamped = size <= 0 ? 1 : (size > 0xffffffffll ? 0xffffffffu : static_cast<uint32_t>(size));
            a.victim_fsd.add(clamped, 1.0 / rate);
         }
         a.victim_count = static_cast<double>(sampled_victims.size()) / rate;
         if (a.losses.hl_status == DeltaStatus::Failure)
            a.victim_count = static_cast<double>(a.losses.hl_victim_estimate) +
                             static_cast<double>(a.losses.ll_losses.size()) / rate;
      } else {
         a.victim_count = static_cast<double>(a.losses.hl_status == DeltaStatus::Success
                                                  ? static_cast<int64_t>(a.losses.hl_losses.size())
                                                  : a.losses.hl_victim_estimate) +
                          static_cast<double>(a.losses.ll_victim_estimate) / rate;
      }
   }
   return a;
}

void Controller::trim_heavy_band(const EpochAnalysis& a, uint32_t m_hh,
                                 std::map<uint32_t, ClassifierThresholds>& th) const {
   double slots = static_cast<double>(m_hh) * d_;
   for (const auto& s : a.switches) {
      if (!s.hh_ok) continue;
      double expected = static_cast<double>(s.hh.size()) / slots;
      if (expected < cfg_.low_load || expected > cfg_.target_load) {
         auto& t = th[s.switch_id];
         t.t_h = choose_threshold(s.fsd, cfg_.target_load * slots);
         if (t.t_h < t.t_l) t.t_h = t.t_l;
      }
   }
}

void Controller::decide_healthy(const EpochAnalysis& a, const std::vector<SketchGroup>& groups,
                                std::map<uint32_t, ClassifierThresholds>& th, EncoderLayout& layout,
                                bool& layout_changed) {
   uint32_t m_hh = layout.m_hh;
   double hh_slots = static_cast<double>(m_hh) * d_;
   if (!a.hh_all_ok) {
      for (const auto& s : a.switches) {
         if (s.hh_ok) continue;
         auto& t = th[s.switch_id];
         t.t_h = std::max(choose_threshold(s.fsd, cfg_.target_load * hh_slots), t.t_h + 1);
      }
      return;
   }

   if (a.losses.hl_status == DeltaStatus::Failure) {
      double victims;
      if (a.losses.hl_estimate_saturated) {
         // Every flow could be a victim; the flow count also feeds the
         // sample rate so the floor alone would leave it far too high.
         double flow_count = 0.0;
         for (const auto& s : a.switches) flow_count += static_cast<double>(s.flow_count);
         victims = std::max(flow_count, static_cast<double>(m_df_) * d_ / cfg_.target_load + 1.0);
      } else {
         victims = static_cast<double>(a.losses.hl_victim_estimate);
      }
      uint32_t required = static_cast<uint32_t>(std::ceil(victims / (cfg_.target_load * d_)));
      if (required > m_df_) {
         mode_ = Mode::Ill;
         layout = cfg_.ill_layout;
         layout_changed = true;
         uint32_t t_l = 1;
         for (const auto& [id, t] : th) {
            (void)id;
            t_l = std::max(t_l, t.t_h);
         }
         double ll_slots = static_cast<double>(layout.m_ll) * d_;
         double rate = std::clamp(cfg_.target_load * ll_slots / std::max(victims, 1.0), minimum_rate(layout.m_ll), 1.0);
         for (auto& [id, t] : th) {
            (void)id;
            t.t_l = t_l;
            t.sample_rate = rate;
            if (t.t_h < t_l) t.t_h = t_l;
         }
      } else {
         uint32_t m_hl = std::max(required, cfg_.reserve_hl);
         if (m_hl != layout.m_hl) {
            layout = EncoderLayout{m_uf_ - m_hl, m_hl, 0};
            layout_changed = true;
         }
      }
   } else if (a.losses.hl_status == DeltaStatus::Success && a.hl_load < cfg_.low_load) {
      double victims = static_cast<double>(a.losses.hl_losses.size());
      uint32_t m_hl = std::max(static_cast<uint32_t>(std::ceil(victims / (cfg_.target_load * d_))), cfg_.reserve_hl);
      if (m_hl < layout.m_hl) {
         layout = EncoderLayout{m_uf_ - m_hl, m_hl, 0};
         layout_changed = true;
      }
   }

   trim_heavy_band(a, layout.m_hh, th);
   (void)groups;
}

void Controller::decide_ill(const EpochAnalysis& a, const std::vector<SketchGroup>& groups,
                            std::map<uint32_t, ClassifierThresholds>& th, EncoderLayout& layout,
                            bool& layout_changed) {
   double hh_slots = static_cast<double>(layout.m_hh) * d_;
   double hl_slots = static_cast<double>(layout.m_hl) * d_;
   double ll_slots = static_cast<double>(layout.m_ll) * d_;

   bool stop = false;
   if (!a.hh_all_ok) {
      for (const auto& s : a.switches) {
         if (s.hh_ok) continue;
         auto& t = th[s.switch_id];
         t.t_h = std::max(choose_threshold(s.fsd, cfg_.target_load * hh_slots), t.t_h + 1);
         if (t.t_h < t.t_l) t.t_h = t.t_l;
      }
      stop = true;
   }
   if (a.hh_all_ok && a.losses.ll_status == DeltaStatus::Failure) {
      double rate = th.begin()->second.sample_rate;
      double next;
      if (a.losses.ll_estimate_saturated || a.losses.ll_victim_estimate <= 0)
         next = rate * 0.1;
      else
         next = rate * cfg_.target_load * ll_slots / static_cast<double>(a.losses.ll_victim_estimate);
      next = std::clamp(next, minimum_rate(layout.m_ll), 1.0);
      for (auto& [id, t] : th) {
         (void)id;
         t.sample_rate = next;
      }
      stop = true;
   }
   if (stop) return;

   if (a.losses.hl_status == DeltaStatus::Failure) {
      uint32_t t_l = th.begin()->second.t_l;
      double capacity = cfg_.target_load * hl_slots;
      double victims = a.losses.hl_estimate_saturated ? 4.0 * capacity
                                                      : static_cast<double>(a.losses.hl_victim_estimate);
      uint32_t next = std::max<uint32_t>(t_l + 1, static_cast<uint32_t>(std::ceil(t_l * victims / capacity)));
      for (auto& [id, t] : th) {
         (void)id;
         t.t_l = next;
         if (t.t_h < next) t.t_h = next;
      }
      return;
   }

   // Both deltas decoded: decide whether attention can move back to the
   // full healthy layout, otherwise keep the loss classes near target.
   uint32_t required =
       static_cast<uint32_t>(std::ceil(a.victim_count / (cfg_.target_load * d_)));
   if (required <= m_df_) {
      mode_ = Mode::Healthy;
      uint32_t m_hl = std::max(required, cfg_.reserve_hl);
      layout = EncoderLayout{m_uf_ - m_hl, m_hl, 0};
      layout_changed = true;
      for (auto& [id, t] : th) {
         (void)id;
         t.t_l = 1;
         t.sample_rate = 1.0;
      }
   } else {
      bool t_l_changed = false;
      if (a.hl_load < cfg_.low_load) {
         uint32_t next = std::max<uint32_t>(choose_threshold(a.victim_fsd, cfg_.target_load * hl_slots), 2);
         auto& first = th.begin()->second;
         if (next != first.t_l) {
            t_l_changed = true;
            for (auto& [id, t] : th) {
               (void)id;
               t.t_l = next;
               if (t.t_h < next) t.t_h = next;
            }
         }
      }
      if (a.ll_load < cfg_.low_load || t_l_changed) {
         uint32_t t_l = th.begin()->second.t_l;
         double light_victims = std::max(a.victim_fsd.total() - a.victim_fsd.ccdf(t_l), 1.0);
         double rate = std::clamp(cfg_.target_load * ll_slots / light_victims, minimum_rate(layout.m_ll), 1.0);
         for (auto& [id, t] : th) {
            (void)id;
            t.sample_rate = rate;
         }
      }
   }

   trim_heavy_band(a, layout.m_hh, th);
   (void)groups;
}

std::map<uint32_t, StagedConfig> Controller::decide(const EpochAnalysis& a, const std::vector<SketchGroup>& groups) {
   std::map<uint32_t, ClassifierThresholds> th;
   for (const auto& g : groups) th[g.switch_id] = g.config.thresholds;
   EncoderLayout layout = groups[0].config.layout;
   bool layout_changed = false;

   if (mode_ == Mode::Healthy)
      decide_healthy(a, groups, th, layout, layout_changed);
   else
      decide_ill(a, groups, th, layout, layout_changed);

   bool any_change = layout_changed;
   for (const auto& g : groups) {
      const auto& t = th.at(g.switch_id);
      const auto& old = g.config.thresholds;
      if (t.t_h != old.t_h || t.t_l != old.t_l || t.sample_rate != old.sample_rate) any_change = true;
   }

   // Stage every switch or none: partial staging would leave the group
   // generations diverged, and the staleness guard compares one scalar.
   std::map<uint32_t, StagedConfig> staged;
   if (any_change)
      for (const auto& g : groups) staged[g.switch_id] = StagedConfig{layout, th.at(g.switch_id)};
   return staged;
}

Controller::Decision Controller::process_epoch(const std::vector<SketchGroup>& groups) {
   Decision dec;
   dec.analysis = analyze(groups);
   dec.analysis.stale = dec.analysis.generation < last_staged_generation_;
   dec.tasks = accumulation_tasks(groups, cfg_, prev_groups_.empty() ? nullptr : &prev_groups_);
   Mode mode_before = dec.analysis.mode;
   if (!dec.analysis.stale && !groups.empty()) {
      dec.staged = decide(dec.analysis, groups);
      if (!dec.staged.empty()) last_staged_generation_ = dec.analysis.generation + 1;
   }

   nlohmann::json rec;
   rec["epoch"] = dec.analysis.epoch_index;
   rec["generation"] = dec.analysis.generation;
   rec["stale"] = dec.analysis.stale;
   rec["mode"] = mode_name(mode_before);
   rec["mode_after"] = mode_name(mode_);
   nlohmann::json sw = nlohmann::json::array();
   for (const auto& s : dec.analysis.switches) {
      nlohmann::json j;
      j["id"] = s.switch_id;
      j["flow_count"] = s.flow_count;
      j["hh_ok"] = s.hh_ok;
      j["hh_flows"] = s.hh.size();
      j["hh_load"] = s.hh_load;
      sw.push_back(std::move(j));
   }
   rec["switches"] = std::move(sw);
   rec["losses_usable"] = dec.analysis.losses.usable;
   rec["hl"] = {{"status", delta_status_name(dec.analysis.losses.hl_status)},
                {"load", dec.analysis.hl_load},
                {"flows", dec.analysis.losses.hl_losses.size()},
                {"victim_estimate", dec.analysis.losses.hl_victim_estimate}};
   rec["ll"] = {{"status", delta_status_name(dec.analysis.losses.ll_status)},
                {"load", dec.analysis.ll_load},
                {"flows", dec.analysis.losses.ll_losses.size()},
                {"victim_estimate", dec.analysis.losses.ll_victim_estimate}};
   rec["victim_count"] = dec.analysis.victim_count;
   rec["tasks"] = {{"heavy_hitters", dec.tasks.heavy_hitters.size()},
                   {"heavy_changes", dec.tasks.heavy_changes.size()},
                   {"cardinality", dec.tasks.cardinality},
                   {"entropy", dec.tasks.entropy}};
   nlohmann::json staged = nlohmann::json::object();
   for (const auto& [id, s] : dec.staged) {
      staged[std::to_string(id)] = {{"m_hh", s.layout.m_hh},
                                    {"m_hl", s.layout.m_hl},
                                    {"m_ll", s.layout.m_ll},
                                    {"t_h", s.thresholds.t_h},
                                    {"t_l", s.thresholds.t_l},
                                    {"sample_rate", s.thresholds.sample_rate}};
   }
   rec["staged"] = std::move(staged);
   dec.record = std::move(rec);

   prev_groups_ = groups;
   return dec;
}

}  // namespace flowtel
