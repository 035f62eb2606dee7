#include "flowtel/mrac.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>

namespace flowtel {

double FsdEstimate::total() const {
   double t = 0.0;
   for (const auto& [s, c] : ns) {
      (void)s;
      t += c;
   }
   return t;
}

double FsdEstimate::ccdf(uint32_t t) const {
   double acc = 0.0;
   for (auto it = ns.lower_bound(t); it != ns.end(); ++it) acc += it->second;
   return acc;
}

void FsdEstimate::add(uint32_t size, double weight) {
   if (size == 0 || weight <= 0.0) return;
   ns[size] += weight;
}

void FsdEstimate::merge(const FsdEstimate& other) {
   for (const auto& [s, c] : other.ns) ns[s] += c;
}

namespace {

int max_parts(uint32_t value) {
   if (value <= 32) return 4;
   if (value <= 256) return 3;
   return 2;
}

// Walks multisets of sizes from `support` summing to `remaining`, at most
// `parts_left` parts, non-decreasing to avoid duplicates.
void walk_partitions(uint32_t remaining, int parts_left, size_t min_idx, const std::vector<uint32_t>& support,
                     std::vector<uint32_t>& cur, const std::function<void(const std::vector<uint32_t>&)>& emit) {
   for (size_t i = min_idx; i < support.size(); ++i) {
      uint32_t s = support[i];
      if (s > remaining) break;
      if (s == remaining) {
         cur.push_back(s);
         emit(cur);
         cur.pop_back();
         continue;
      }
      if (parts_left <= 1) continue;
      if (s * 2 > remaining && i + 1 == support.size()) continue;
      cur.push_back(s);
      walk_partitions(remaining - s, parts_left - 1, i, support, cur, emit);
      cur.pop_back();
   }
}

}  // namespace

std::map<uint32_t, double> mrac_em(const std::vector<uint32_t>& counters, uint32_t saturation, int max_iters,
                                   double tol) {
   std::map<uint32_t, uint64_t> hist;
   size_t usable = 0;
   for (uint32_t v : counters) {
      if (v >= saturation) continue;
      ++usable;
      if (v > 0) hist[v] += 1;
   }
   if (hist.empty() || usable == 0) return {};

   std::map<uint32_t, double> ns;
   for (const auto& [v, c] : hist) ns[v] = static_cast<double>(c);

   std::vector<uint32_t> cur;
   for (int iter = 0; iter < max_iters; ++iter) {
      std::vector<uint32_t> support;
      support.reserve(ns.size());
      for (const auto& [s, c] : ns)
         if (c > 0.0) support.push_back(s);

      std::map<uint32_t, double> next;
      for (const auto& [v, count] : hist) {
         double norm = 0.0;
         std::map<uint32_t, double> expect;
         auto emit = [&](const std::vector<uint32_t>& parts) {
            double w = 1.0;
            size_t i = 0;
            while (i < parts.size()) {
               size_t j = i;
               while (j < parts.size() && parts[j] == parts[i]) ++j;
               size_t mult = j - i;
               double lambda = ns.at(parts[i]) / static_cast<double>(usable);
               for (size_t k = 0; k < mult; ++k) w *= lambda / static_cast<double>(k + 1);
               i = j;
            }
            if (w <= 0.0) return;
            norm += w;
            for (uint32_t s : parts) expect[s] += w;
         };
         cur.clear();
         walk_partitions(v, max_parts(v), 0, support, cur, emit);
         if (norm <= 0.0) {
            next[v] += static_cast<double>(count);
            continue;
         }
         for (const auto& [s, e] : expect) next[s] += static_cast<double>(count) * e / norm;
      }

      double delta = 0.0;
      double mass = 0.0;
      for (const auto& [s, c] : next) {
         auto it = ns.find(s);
         delta += std::abs(c - (it == ns.end() ? 0.0 : it->second));
         mass += c;
      }
      for (const auto& [s, c] : ns)
         if (next.find(s) == next.end()) delta += c;
      ns = std::move(next);
      if (delta <= tol * std::max(1.0, mass)) break;
   }
   return ns;
}

FsdEstimate estimate_fsd(const TowerSketch& tower, const Flowset& hh, uint32_t t_h) {
   FsdEstimate out;
   const auto& levels = tower.config().levels;
   uint32_t prev_sat = 1;
   for (size_t l = 0; l < levels.size(); ++l) {
      uint32_t sat = (1u << levels[l].bits) - 1;
      uint32_t lo = (l == 0) ? 1 : prev_sat;
      auto em = mrac_em(tower.level_array(l), sat);
      for (const auto& [s, c] : em)
         if (s >= lo && s < sat) out.add(s, c);
      prev_sat = sat;
   }
   for (const auto& [flow, q] : hh.entries) {
      (void)flow;
      int64_t size = static_cast<int64_t>(t_h) + q - 1;
      if (size >= static_cast<int64_t>(prev_sat)) {
         uint32_t clamped = size > 0xffffffffll ? 0xffffffffu : static_cast<uint32_t>(size);
         out.add(clamped, 1.0);
      }
   }
   return out;
}

double fsd_entropy(const FsdEstimate& fsd) {
   double n = 0.0;
   for (const auto& [s, c] : fsd.ns) n += static_cast<double>(s) * c;
   if (n <= 0.0) return 0.0;
   double h = 0.0;
   for (const auto& [s, c] : fsd.ns) {
      double p = static_cast<double>(s) / n;
      h -= c * p * std::log(p);
   }
   return h;
}

}  // namespace flowtel
