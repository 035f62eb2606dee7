#ifndef FLOWTEL_MRAC_HPP
#define FLOWTEL_MRAC_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "flowtel/fermat_sketch.hpp"
#include "flowtel/tower.hpp"

namespace flowtel {

// Flow-size histogram with fractional counts (estimates).
struct FsdEstimate {
   std::map<uint32_t, double> ns;

   double total() const;
   // Estimated number of flows with size >= t.
   double ccdf(uint32_t t) const;
   void add(uint32_t size, double weight);
   void merge(const FsdEstimate& other);
};

// Expectation-maximization over one counter array's value histogram,
// redistributing each observed counter value across the flow-size
// compositions that could have produced it. Saturated counters are
// excluded; they carry no usable value.
std::map<uint32_t, double> mrac_em(const std::vector<uint32_t>& counters, uint32_t saturation, int max_iters = 50,
                                   double tol = 1e-4);

// Network flow-size distribution from a collected classifier: each tower
// level contributes the size range its counters can express, and flows at
// or beyond the widest level's reach come from the decoded HH flowset.
FsdEstimate estimate_fsd(const TowerSketch& tower, const Flowset& hh, uint32_t t_h);

// Shannon entropy of the traffic described by the size histogram, in nats.
double fsd_entropy(const FsdEstimate& fsd);

}  // namespace flowtel

#endif
