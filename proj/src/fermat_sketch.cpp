#include "flowtel/fermat_sketch.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "flowtel/errors.hpp"
#include "flowtel/hashing.hpp"

namespace flowtel {

void FermatParams::validate() const {
   if (d < 2)
      throw bad_parameter("need at least 2 bucket arrays");
   if (m < 1)
      throw bad_parameter("need at least 1 bucket per array");
   if (!is_prime(p))
      throw bad_parameter("modulus is not prime");
   if (seeds.size() != d)
      throw bad_parameter("seed count must equal d");
   std::set<uint64_t> distinct(seeds.begin(), seeds.end());
   if (distinct.size() != seeds.size())
      throw bad_parameter("seeds must be pairwise distinct");
   if (fingerprint_bits >= 32)
      throw bad_parameter("fingerprint width out of range");
}

FermatParams FermatParams::make(uint32_t d, uint32_t m, uint64_t master_seed, uint64_t p, uint32_t fingerprint_bits) {
   FermatParams params;
   params.d = d;
   params.m = m;
   params.p = p;
   params.seeds = derive_seeds(master_seed, "encoder-array", d);
   params.fingerprint_bits = fingerprint_bits;
   params.fingerprint_seed = fingerprint_bits ? derive_seed(master_seed, "fingerprint") : 0;
   params.validate();
   return params;
}

int64_t Flowset::add(uint64_t f, int64_t n) {
   auto it = entries.find(f);
   int64_t prev = (it == entries.end()) ? 0 : it->second;
   int64_t now = prev + n;
   if (now == 0) {
      if (it != entries.end())
         entries.erase(it);
   } else if (it == entries.end()) {
      entries.emplace(f, now);
   } else {
      it->second = now;
   }
   return prev;
}

int64_t Flowset::get(uint64_t f) const {
   auto it = entries.find(f);
   return it == entries.end() ? 0 : it->second;
}

FermatSketch::FermatSketch(FermatParams params) : params_(std::move(params)) {
   params_.validate();
   grid_.resize((size_t)params_.d * params_.m);
}

uint64_t FermatSketch::fingerprint_of(uint64_t f) const {
   return keyed_hash(f, params_.fingerprint_seed) & ((uint64_t(1) << params_.fingerprint_bits) - 1);
}

uint64_t FermatSketch::extended_id(uint64_t f) const {
   if (params_.fingerprint_bits == 0)
      return f;
   return (f << params_.fingerprint_bits) | fingerprint_of(f);
}

uint32_t FermatSketch::index(uint32_t i, uint64_t f) const {
   return (uint32_t)(keyed_hash(extended_id(f), params_.seeds[i]) % params_.m);
}

void FermatSketch::update(uint64_t f, int64_t n) {
   uint64_t id = f;
   if (params_.fingerprint_bits != 0) {
      if ((f >> (64 - params_.fingerprint_bits)) != 0)
         throw id_out_of_range("flow ID leaves no room for the fingerprint");
      id = extended_id(f);
   }
   if (id >= params_.p)
      throw id_out_of_range("flow ID must be below the modulus");
   uint64_t n_mod = reduce_mod(n, params_.p);
   uint64_t term = mul_mod(id, n_mod, params_.p);
   for (uint32_t i = 0; i < params_.d; ++i) {
      FermatBucket& b = bucket(i, (uint32_t)(keyed_hash(id, params_.seeds[i]) % params_.m));
      b.count += n;
      b.idsum = add_mod(b.idsum, term, params_.p);
   }
}

FermatSketch FermatSketch::combine(const FermatSketch& a, const FermatSketch& b, int sign) {
   if (a.params_ != b.params_)
      throw incompatible_sketches("combine requires identical parameters");
   if (sign != 1 && sign != -1)
      throw bad_parameter("sign must be +1 or -1");
   FermatSketch out = a;
   for (size_t k = 0; k < out.grid_.size(); ++k) {
      const FermatBucket& rhs = b.grid_[k];
      FermatBucket& lhs = out.grid_[k];
      lhs.count += sign * rhs.count;
      lhs.idsum = (sign > 0) ? add_mod(lhs.idsum, rhs.idsum, a.params_.p) : sub_mod(lhs.idsum, rhs.idsum, a.params_.p);
   }
   return out;
}

FermatSketch FermatSketch::fold(uint32_t k) const {
   if (k == 0 || params_.m % k != 0)
      throw fold_indivisible("fold factor must divide the bucket count");
   FermatParams folded = params_;
   folded.m = params_.m / k;
   FermatSketch out(folded);
   for (uint32_t i = 0; i < params_.d; ++i) {
      for (uint32_t j = 0; j < params_.m; ++j) {
         const FermatBucket& src = bucket(i, j);
         FermatBucket& dst = out.bucket(i, j % folded.m);
         dst.count += src.count;
         dst.idsum = add_mod(dst.idsum, src.idsum, params_.p);
      }
   }
   return out;
}

std::optional<std::pair<uint64_t, int64_t>> FermatSketch::is_pure(uint32_t i, uint32_t j,
                                                                  const Flowset& blocklist) const {
   const FermatBucket& b = bucket(i, j);
   if (b.is_zero())
      return std::nullopt;
   uint64_t c = reduce_mod(b.count, params_.p);
   if (c == 0)
      return std::nullopt;
   uint64_t id = mul_mod(b.idsum, mod_inverse(c, params_.p), params_.p);
   if (keyed_hash(id, params_.seeds[i]) % params_.m != j)
      return std::nullopt;
   uint64_t f = id;
   if (params_.fingerprint_bits != 0) {
      uint64_t fp = id & ((uint64_t(1) << params_.fingerprint_bits) - 1);
      f = id >> params_.fingerprint_bits;
      if (fp != fingerprint_of(f))
         return std::nullopt;
   }
   int64_t blocked = blocklist.get(f);
   if (blocked != 0 && (blocked == b.count || blocked == -b.count))
      return std::nullopt;
   return std::make_pair(f, b.count);
}

DecodeOutcome FermatSketch::decode() const {
   FermatSketch work = *this;
   DecodeOutcome out;
   Flowset blocklist;

   std::deque<std::pair<uint32_t, uint32_t>> queue;
   for (uint32_t i = 0; i < params_.d; ++i)
      for (uint32_t j = 0; j < params_.m; ++j)
         if (!work.bucket(i, j).is_zero())
            queue.emplace_back(i, j);

   // An overloaded sketch can keep yielding spurious pure buckets, each
   // re-seeding the queue, so consecutive-miss tracking alone does not
   // terminate. The total-pop ceiling is far above what any decodable
   // sketch needs.
   const uint64_t cap = 4ull * params_.d * params_.m;
   const uint64_t pop_ceiling = 64ull * params_.d * params_.m;
   uint64_t unproductive = 0;
   while (!queue.empty() && unproductive < cap && out.pop_iterations < pop_ceiling) {
      auto [i, j] = queue.front();
      queue.pop_front();
      ++out.pop_iterations;
      if (work.bucket(i, j).is_zero()) {
         ++unproductive;
         continue;
      }
      auto pure = work.is_pure(i, j, blocklist);
      if (!pure) {
         ++unproductive;
         continue;
      }
      auto [f, n] = *pure;
      int64_t prev = out.flowset.add(f, n);
      if (prev == -n && prev != 0) {
         // The flow was extracted twice with opposite frequencies; both
         // halves are spurious. Keep it out of further verification.
         out.blocklist_events.emplace_back(f, prev);
         blocklist.entries[f] = prev;
      }
      work.update(f, -n);
      for (uint32_t t = 0; t < params_.d; ++t) {
         uint32_t jt = work.index(t, f);
         if (!work.bucket(t, jt).is_zero())
            queue.emplace_back(t, jt);
      }
      unproductive = 0;
   }

   out.residual_nonzero_buckets = work.nonzero_buckets();
   out.status = (out.residual_nonzero_buckets == 0) ? DecodeStatus::Success : DecodeStatus::Failure;
   return out;
}

size_t FermatSketch::nonzero_buckets() const {
   return (size_t)std::count_if(grid_.begin(), grid_.end(), [](const FermatBucket& b) { return !b.is_zero(); });
}

LinearCountResult linear_count(size_t zero_entries, size_t total) {
   if (total < 1)
      throw bad_parameter("linear counting needs a nonempty array");
   if (zero_entries == 0)
      return LinearCountResult{true, (int64_t)total};
   if (zero_entries >= total)
      return LinearCountResult{false, 0};
   double est = -(double)total * std::log((double)zero_entries / (double)total);
   return LinearCountResult{false, (int64_t)std::llround(est)};
}

LinearCountResult linear_count_array(const FermatSketch& s, uint32_t array_index) {
   size_t zeros = 0;
   for (uint32_t j = 0; j < s.m(); ++j)
      if (s.bucket(array_index, j).is_zero())
         ++zeros;
   return linear_count(zeros, s.m());
}

}  // namespace flowtel
