#include "flowtel/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <vector>

#include "flowtel/controller.hpp"
#include "flowtel/edge_switch.hpp"
#include "flowtel/fermat_sketch.hpp"
#include "flowtel/hashing.hpp"
#include "flowtel/mrac.hpp"
#include "flowtel/serialize.hpp"
#include "flowtel/simnet.hpp"

namespace flowtel::experiments {

namespace {

using nlohmann::json;

uint64_t cfg_u64(const json& cfg, const char* key, uint64_t fallback) {
   auto it = cfg.find(key);
   return it != cfg.end() ? it->get<uint64_t>() : fallback;
}

double cfg_f64(const json& cfg, const char* key, double fallback) {
   auto it = cfg.find(key);
   return it != cfg.end() ? it->get<double>() : fallback;
}

// IDs stay below 2^52 so they leave room for the encoder fingerprint.
uint64_t random_flow_id(uint64_t index, uint64_t seed, uint64_t p) {
   return 1 + keyed_hash(index, seed) % std::min(p - 1, (uint64_t(1) << 52) - 1);
}

bool coin(uint64_t key, uint64_t seed, double probability) {
   if (probability >= 1.0) return true;
   if (probability <= 0.0) return false;
   return static_cast<double>(keyed_hash(key, seed) >> 11) < probability * 9007199254740992.0;
}

}  // namespace

json threshold_sweep(const json& cfg) {
   uint64_t seed = cfg_u64(cfg, "seed", 1);
   uint32_t trials = static_cast<uint32_t>(cfg_u64(cfg, "trials", 200));
   uint64_t flows = cfg_u64(cfg, "flows", 10000);
   uint32_t d = static_cast<uint32_t>(cfg_u64(cfg, "d", 3));
   std::vector<double> ratios = {1.00, 1.05, 1.10, 1.15, 1.20, 1.25, 1.30, 1.40, 1.60, 2.00};
   if (cfg.contains("ratios")) ratios = cfg.at("ratios").get<std::vector<double>>();
   std::sort(ratios.begin(), ratios.end());

   json rows = json::array();
   json points = json::array();
   std::vector<std::pair<double, double>> curve;
   for (size_t pi = 0; pi < ratios.size(); ++pi) {
      double ratio = ratios[pi];
      uint32_t m = std::max<uint32_t>(8, static_cast<uint32_t>(std::ceil(ratio * static_cast<double>(flows) / d)));
      uint32_t successes = 0;
      for (uint32_t t = 0; t < trials; ++t) {
         uint64_t sketch_seed = derive_seed(seed, "threshold-sketch", pi * trials + t);
         uint64_t flow_seed = derive_seed(seed, "threshold-flows", t);
         auto params = FermatParams::make(d, m, sketch_seed, kDefaultPrime, kEncoderFingerprintBits);
         FermatSketch s(params);
         for (uint64_t i = 0; i < flows; ++i) s.insert(random_flow_id(i, flow_seed, params.p));
         auto out = s.decode();
         bool ok = out.status == DecodeStatus::Success;
         successes += ok ? 1 : 0;
         rows.push_back({ratio, t, seed, ok ? 1 : 0});
      }
      double rate = static_cast<double>(successes) / trials;
      curve.emplace_back(ratio, rate);
      points.push_back({{"buckets_per_flow", ratio},
                        {"m_per_array", m},
                        {"successes", successes},
                        {"trials", trials},
                        {"success_rate", rate}});
   }

   double crossing = 0.0;
   for (size_t i = 1; i < curve.size(); ++i) {
      if (curve[i - 1].second < 0.5 && curve[i].second >= 0.5) {
         double x0 = curve[i - 1].first, y0 = curve[i - 1].second;
         double x1 = curve[i].first, y1 = curve[i].second;
         crossing = y1 == y0 ? x1 : x0 + (0.5 - y0) * (x1 - x0) / (y1 - y0);
         break;
      }
   }

   json out;
   out["experiment"] = "threshold-sweep";
   out["seed"] = seed;
   out["flows"] = flows;
   out["d"] = d;
   out["columns"] = {"buckets_per_flow", "trial", "seed", "success"};
   out["rows"] = std::move(rows);
   out["points"] = std::move(points);
   out["crossing_50pct"] = crossing;
   return out;
}

namespace {

struct VictimSet {
   std::vector<std::pair<uint64_t, int64_t>> drops;  // (flow id, lost packets)
};

// Sweep probes verify extractions with a wide tag; victim IDs must leave
// the matching headroom below the modulus.
constexpr uint32_t kSweepFingerprintBits = 16;

VictimSet realize_victims(uint64_t count, uint64_t flow_size, double rate, uint64_t seed, uint64_t p) {
   VictimSet v;
   v.drops.reserve(count);
   uint64_t id_seed = derive_seed(seed, "loss-victim-id", 0);
   uint64_t drop_seed = derive_seed(seed, "loss-drop", 0);
   uint64_t id_cap = std::min(p - 1, (uint64_t(1) << (60 - kSweepFingerprintBits)) - 1);
   for (uint64_t i = 0; i < count; ++i) {
      uint64_t id = 1 + keyed_hash(i, id_seed) % id_cap;
      int64_t drops = 1;  // a victim loses at least one packet
      for (uint64_t j = 1; j < flow_size; ++j)
         if (coin(id ^ mix64(j), drop_seed, rate)) ++drops;
      v.drops.emplace_back(id, drops);
   }
   return v;
}

bool probe_decode(uint32_t m, uint32_t d, const std::vector<VictimSet>& trial_sets, uint64_t seed, uint32_t need,
                  double* mean_us) {
   uint32_t ok = 0;
   double total_us = 0.0;
   for (size_t t = 0; t < trial_sets.size(); ++t) {
      auto params = FermatParams::make(d, m, derive_seed(seed, "loss-sketch", t * 1000003 + m), kDefaultPrime,
                                       kSweepFingerprintBits);
      FermatSketch s(params);
      for (const auto& [id, n] : trial_sets[t].drops) s.update(id, n);
      auto start = std::chrono::steady_clock::now();
      auto out = s.decode();
      auto stop = std::chrono::steady_clock::now();
      total_us += std::chrono::duration<double, std::micro>(stop - start).count();
      if (out.status == DecodeStatus::Success) ++ok;
   }
   if (mean_us != nullptr) *mean_us = total_us / static_cast<double>(trial_sets.size());
   return ok >= need;
}

uint32_t min_buckets(uint32_t d, const std::vector<VictimSet>& trial_sets, uint64_t seed, uint32_t need,
                     double* mean_us) {
   uint64_t victims = trial_sets.front().drops.size();
   uint32_t lo = 8;
   uint32_t hi = std::max<uint32_t>(16, static_cast<uint32_t>(victims));
   while (!probe_decode(hi, d, trial_sets, seed, need, nullptr)) {
      hi *= 2;
      if (hi > (1u << 22)) break;
   }
   while (lo < hi) {
      uint32_t mid = lo + (hi - lo) / 2;
      if (probe_decode(mid, d, trial_sets, seed, need, nullptr))
         hi = mid;
      else
         lo = mid + 1;
   }
   probe_decode(hi, d, trial_sets, seed, need, mean_us);
   return hi;
}

// End-to-end grounding for the direct delta construction: a full
// upstream/downstream pair over every flow must difference to exactly the
// sketch built from the per-victim drop counts alone.
bool delta_linearity_check(uint64_t flows, uint64_t seed) {
   uint32_t d = 3, m = 512;
   uint64_t flow_size = 20;
   auto params = FermatParams::make(d, m, derive_seed(seed, "linearity-sketch", 0), kDefaultPrime,
                                    kEncoderFingerprintBits);
   FermatSketch up(params), down(params), direct(params);
   uint64_t id_seed = derive_seed(seed, "linearity-id", 0);
   uint64_t drop_seed = derive_seed(seed, "linearity-drop", 0);
   for (uint64_t i = 0; i < flows; ++i) {
      uint64_t id = random_flow_id(i, id_seed, params.p);
      bool victim = i % 10 == 0;
      int64_t lost = 0;
      for (uint64_t j = 0; j < flow_size; ++j) {
         up.insert(id);
         bool drop = victim && coin(id ^ mix64(j), drop_seed, 0.2);
         if (drop)
            ++lost;
         else
            down.insert(id);
      }
      if (lost > 0) direct.update(id, lost);
   }
   FermatSketch delta = FermatSketch::combine(up, down, -1);
   return delta == direct;
}

}  // namespace

json loss_sweep(const json& cfg) {
   uint64_t seed = cfg_u64(cfg, "seed", 1);
   uint32_t d = static_cast<uint32_t>(cfg_u64(cfg, "d", 4));
   uint32_t trials = static_cast<uint32_t>(cfg_u64(cfg, "trials", 100));
   uint32_t need = static_cast<uint32_t>(cfg_u64(cfg, "need", 99));
   uint32_t repeats = std::max<uint32_t>(1, static_cast<uint32_t>(cfg_u64(cfg, "repeats", 3)));
   uint64_t flow_size = cfg_u64(cfg, "flow_size", 600);
   uint64_t fixed_victims = cfg_u64(cfg, "fixed_victims", 100);
   double fixed_rate = cfg_f64(cfg, "fixed_rate", 0.1);

   std::vector<uint64_t> victim_axis = {100, 200, 400, 800, 1600, 3200, 6000};
   std::vector<double> rate_axis = {0.01, 0.05, 0.1, 0.5, 1.0};
   std::vector<uint64_t> flow_axis = {1000, 10000, 100000};
   if (cfg.contains("victim_axis")) victim_axis = cfg.at("victim_axis").get<std::vector<uint64_t>>();
   if (cfg.contains("rate_axis")) rate_axis = cfg.at("rate_axis").get<std::vector<double>>();
   if (cfg.contains("flow_axis")) flow_axis = cfg.at("flow_axis").get<std::vector<uint64_t>>();

   uint64_t p = kDefaultPrime;
   json rows = json::array();

   auto sets_for = [&](uint64_t victims, double rate, uint64_t salt) {
      std::vector<VictimSet> sets;
      sets.reserve(trials);
      for (uint32_t t = 0; t < trials; ++t)
         sets.push_back(realize_victims(victims, flow_size, rate, derive_seed(seed, "loss-trial", salt * 1000 + t), p));
      return sets;
   };
   // One search estimates a tail quantile, so its spread is wide; the row
   // keeps the mean of independent searches on fresh victim sets.
   auto emit = [&](const char* axis, double value, uint64_t victims, double rate, uint64_t salt) {
      double mean_m = 0.0, mean_us = 0.0;
      for (uint32_t r = 0; r < repeats; ++r) {
         uint64_t sub = salt * 100 + r;
         auto sets = sets_for(victims, rate, sub);
         double us = 0.0;
         mean_m += min_buckets(d, sets, derive_seed(seed, "loss-axis", sub), need, &us);
         mean_us += us;
      }
      mean_m /= static_cast<double>(repeats);
      mean_us /= static_cast<double>(repeats);
      rows.push_back({axis, value, mean_m, mean_m * d, mean_m * d / static_cast<double>(victims), mean_us, seed});
   };

   uint64_t salt = 0;
   for (uint64_t v : victim_axis) {
      ++salt;
      emit("victims", static_cast<double>(v), v, fixed_rate, salt);
   }
   for (double r : rate_axis) {
      ++salt;
      emit("loss_rate", r, fixed_victims, r, salt);
   }
   for (uint64_t f : flow_axis) {
      ++salt;
      (void)f;  // total flow count cancels out of the delta; victims alone remain
      emit("flows", static_cast<double>(f), fixed_victims, fixed_rate, salt);
   }

   json out;
   out["experiment"] = "loss-sweep";
   out["seed"] = seed;
   out["columns"] = {"axis", "value", "min_m_per_array", "total_buckets", "buckets_per_victim", "decode_us", "seed"};
   out["rows"] = std::move(rows);
   out["delta_linearity_check"] = delta_linearity_check(1000, seed);
   return out;
}

json shift_scenario(const json& cfg) {
   uint64_t seed = cfg_u64(cfg, "seed", 7);
   uint32_t n_switches = static_cast<uint32_t>(cfg_u64(cfg, "switches", 2));
   uint64_t epochs = cfg_u64(cfg, "epochs", 45);
   uint64_t mice = cfg_u64(cfg, "mice", 72000);
   uint64_t mouse_size_max = std::max<uint64_t>(1, cfg_u64(cfg, "mouse_size_max", 10));
   uint64_t elephants = cfg_u64(cfg, "elephants", 2600);
   uint64_t elephant_size = cfg_u64(cfg, "elephant_size", 100);

   // epoch -> (victim_ratio, drop_rate); the entry at epoch 0 is the
   // initial condition, later entries are the scripted state changes.
   // The victim ladder grows the mid part three times, the full-victim
   // step forces the overloaded mode, the rest perturb it in place.
   std::map<uint64_t, std::pair<double, double>> script = {
       {0, {0.0070, 0.9}}, {5, {0.01085, 0.9}}, {10, {0.0217, 0.9}}, {15, {0.03416, 0.9}}, {20, {1.00, 0.9}},
       {25, {1.00, 0.8}},  {30, {0.93, 0.8}},   {35, {0.97, 0.8}},   {40, {0.97, 0.95}}};
   if (cfg.contains("script")) {
      script.clear();
      for (const auto& step : cfg.at("script"))
         script[step.at("epoch").get<uint64_t>()] = {step.at("victim_ratio").get<double>(),
                                                     step.at("drop_rate").get<double>()};
   }

   SwitchConfig base = SwitchConfig::make(seed);
   base.m_uf = static_cast<uint32_t>(cfg_u64(cfg, "m_uf", 2048));
   base.m_df = static_cast<uint32_t>(cfg_u64(cfg, "m_df", 1536));
   uint32_t reserve = static_cast<uint32_t>(cfg_u64(cfg, "reserve_hl", 256));
   base.layout = EncoderLayout{base.m_uf - reserve, reserve, 0};
   base.thresholds.t_h = static_cast<uint32_t>(cfg_u64(cfg, "t_h", 11));
   uint32_t tower_width = static_cast<uint32_t>(cfg_u64(cfg, "tower_width", 262144));
   base.tower.levels = {TowerLevel{tower_width, 8, derive_seed(seed, "shift-tower", 0)},
                        TowerLevel{tower_width / 2, 16, derive_seed(seed, "shift-tower", 1)}};
   base.validate();

   SimNet net(base, n_switches);
   WorkloadSpec w;
   w.model = WorkloadSpec::SizeModel::Trace;
   w.trace.reserve(mice + elephants);
   uint64_t id_seed = derive_seed(seed, "shift-flow-id", 0);
   for (uint64_t i = 0; i < mice + elephants; ++i) {
      TraceRow row;
      row.flow = random_flow_id(i, id_seed, base.p);
      row.packets = i < mice ? 1 + i % mouse_size_max : elephant_size;
      w.trace.push_back(row);
   }
   net.set_workload(w);

   ControllerConfig cc;
   cc.reserve_hl = reserve;
   uint32_t ill_hh = base.m_uf / 4;
   cc.ill_layout = EncoderLayout{ill_hh, base.m_uf - ill_hh - reserve, reserve};
   Controller controller(cc, base.m_uf, base.m_df, base.d);

   json timeline = json::array();
   for (uint64_t e = 0; e < epochs; ++e) {
      auto it = script.find(e);
      if (it != script.end()) {
         LossSpec l;
         l.victim_ratio = it->second.first;
         l.drop_rate = it->second.second;
         l.per_epoch_victims = true;
         net.set_loss(l);
      }

      json active = json::array();
      for (uint32_t s = 0; s < n_switches; ++s) {
         const auto& c = net.at(s).active_config();
         active.push_back({{"switch", s},
                           {"m_hh", c.layout.m_hh},
                           {"m_hl", c.layout.m_hl},
                           {"m_ll", c.layout.m_ll},
                           {"t_h", c.thresholds.t_h},
                           {"t_l", c.thresholds.t_l},
                           {"sample_rate", c.thresholds.sample_rate},
                           {"generation", c.generation}});
      }

      EpochTruth truth = net.run_epoch();
      auto groups = net.rotate_all();
      auto dec = controller.process_epoch(groups);
      net.stage_all(dec.staged);
      net.apply_staged_all();

      uint64_t victims = 0;
      for (const auto& [f, ft] : truth.flows) {
         (void)f;
         if (ft.dropped > 0) ++victims;
      }
      json line;
      line["epoch"] = e;
      line["active"] = std::move(active);
      line["truth"] = {{"generated", truth.generated},
                       {"delivered", truth.delivered},
                       {"dropped", truth.dropped},
                       {"victims", victims}};
      line["controller"] = dec.record;
      timeline.push_back(std::move(line));
   }

   json changes = json::array();
   for (const auto& [e, c] : script)
      if (e > 0) changes.push_back({{"epoch", e}, {"victim_ratio", c.first}, {"drop_rate", c.second}});

   json out;
   out["experiment"] = "shift-scenario";
   out["seed"] = seed;
   out["switches"] = n_switches;
   out["flows"] = mice + elephants;
   out["timeline"] = std::move(timeline);
   out["changes"] = std::move(changes);
   return out;
}

json accuracy_suite(const json& cfg) {
   uint64_t seed = cfg_u64(cfg, "seed", 3);
   json out;
   out["experiment"] = "accuracy-suite";
   out["seed"] = seed;

   {
      uint64_t flows = cfg_u64(cfg, "hh_flows", 10000);
      uint64_t packets = cfg_u64(cfg, "hh_packets", 100000);
      int64_t delta_h = static_cast<int64_t>(cfg_u64(cfg, "delta_h", 500));
      SwitchConfig base = SwitchConfig::make(derive_seed(seed, "accuracy-hh", 0));
      SimNet net(base, 2);
      WorkloadSpec w;
      w.n_flows = flows;
      w.model = WorkloadSpec::SizeModel::Zipf;
      w.zipf_exponent = 1.0;
      w.total_packets = packets;
      net.set_workload(w);
      auto plan = net.plan_epoch(0);
      net.run_epoch();
      auto groups = net.rotate_all();
      ControllerConfig cc;
      cc.heavy_report_delta = delta_h;
      auto tasks = accumulation_tasks(groups, cc, nullptr);

      uint64_t tp = 0, fp = 0, fn = 0;
      std::map<uint64_t, uint64_t> true_sizes;
      for (const auto& f : plan) true_sizes[f.id] += f.packets;
      for (const auto& [id, size] : true_sizes) {
         bool truth = static_cast<int64_t>(size) > delta_h;
         bool reported = tasks.heavy_hitters.find(id) != tasks.heavy_hitters.end();
         if (truth && reported) ++tp;
         if (truth && !reported) ++fn;
      }
      for (const auto& [id, size] : tasks.heavy_hitters) {
         (void)size;
         auto it = true_sizes.find(id);
         if (it == true_sizes.end() || static_cast<int64_t>(it->second) <= delta_h) ++fp;
      }
      double precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
      double recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
      double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
      out["heavy_hitters"] = {{"true_count", tp + fn}, {"tp", tp},        {"fp", fp},
                              {"fn", fn},              {"precision", precision}, {"recall", recall},
                              {"f1", f1}};
   }

   {
      uint64_t seeds = cfg_u64(cfg, "cardinality_seeds", 100);
      uint64_t flows = cfg_u64(cfg, "cardinality_flows", 8000);
      double err_sum = 0.0;
      for (uint64_t s = 0; s < seeds; ++s) {
         uint64_t ts = derive_seed(seed, "accuracy-card", s);
         TowerSketch tower(TowerConfig::two_level_default(ts));
         uint64_t id_seed = derive_seed(ts, "card-ids", 0);
         for (uint64_t i = 0; i < flows; ++i) {
            uint64_t id = random_flow_id(i, id_seed, kDefaultPrime);
            uint32_t size = 1 + static_cast<uint32_t>(keyed_hash(i, ts) % 5);
            for (uint32_t k = 0; k < size; ++k) tower.update(id);
         }
         size_t last = tower.config().levels.size() - 1;
         const auto& arr = tower.level_array(last);
         auto lc = linear_count(static_cast<size_t>(std::count(arr.begin(), arr.end(), 0u)), arr.size());
         err_sum += std::abs(static_cast<double>(lc.estimate) - static_cast<double>(flows)) /
                    static_cast<double>(flows);
      }
      out["cardinality"] = {{"seeds", seeds}, {"flows", flows}, {"mean_abs_rel_err", err_sum / seeds}};
   }

   {
      json ent = json::array();
      for (auto [flows, size] : std::vector<std::pair<uint64_t, uint32_t>>{{2000, 1}, {3000, 4}}) {
         TowerSketch tower(TowerConfig::two_level_default(derive_seed(seed, "accuracy-ent", flows)));
         uint64_t id_seed = derive_seed(seed, "ent-ids", flows);
         for (uint64_t i = 0; i < flows; ++i) {
            uint64_t id = random_flow_id(i, id_seed, kDefaultPrime);
            for (uint32_t k = 0; k < size; ++k) tower.update(id);
         }
         auto fsd = estimate_fsd(tower, Flowset{}, 1);
         double est = fsd_entropy(fsd);
         double exact = std::log(static_cast<double>(flows));
         ent.push_back({{"flows", flows},
                        {"flow_size", size},
                        {"estimate", est},
                        {"exact", exact},
                        {"rel_err", std::abs(est - exact) / exact}});
      }
      out["entropy"] = std::move(ent);
   }
   return out;
}

json decode_file(const std::string& path) {
   FermatSketch s = fermat_from_file(path);
   auto r = s.decode();
   json flows = json::object();
   for (const auto& [f, n] : r.flowset.entries) flows[std::to_string(f)] = n;
   json out;
   out["status"] = r.status == DecodeStatus::Success ? "success" : "failure";
   out["pop_iterations"] = r.pop_iterations;
   out["residual_nonzero_buckets"] = r.residual_nonzero_buckets;
   out["flows"] = std::move(flows);
   out["flow_count"] = r.flowset.size();
   return out;
}

std::string rows_as_csv(const json& result) {
   std::ostringstream os;
   const auto& cols = result.at("columns");
   for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i].get<std::string>();
   os << "\n";
   for (const auto& row : result.at("rows")) {
      for (size_t i = 0; i < row.size(); ++i) {
         if (i) os << ",";
         const auto& v = row[i];
         if (v.is_string())
            os << v.get<std::string>();
         else if (v.is_number_float())
            os << v.get<double>();
         else
            os << v.dump();
      }
      os << "\n";
   }
   return os.str();
}

}  // namespace flowtel::experiments
