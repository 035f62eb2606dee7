#ifndef FLOWTEL_HASHING_HPP
#define FLOWTEL_HASHING_HPP

#include <cstdint>
#include <string_view>
#include <vector>

namespace flowtel {

// 64-bit finalizer with full avalanche (splitmix64 increment constants).
inline uint64_t mix64(uint64_t z) {
   z += 0x9e3779b97f4a7c15ull;
   z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
   z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
   return z ^ (z >> 31);
}

// Keyed hash: two mixing rounds with the seed folded in between them.
inline uint64_t keyed_hash(uint64_t key, uint64_t seed) {
   uint64_t z = mix64(key ^ (seed * 0xff51afd7ed558ccdull));
   return mix64(z ^ seed);
}

// Stable per-purpose seed derivation so every component of an experiment
// (encoder arrays, tower levels, sampling, workload, drops) gets its own
// independent stream from one master seed.
inline uint64_t derive_seed(uint64_t master, std::string_view domain, uint64_t index = 0) {
   uint64_t h = master;
   for (char c : domain)
      h = mix64(h ^ (uint64_t)(unsigned char)c);
   return mix64(h ^ (index * 0x9e3779b97f4a7c15ull));
}

inline std::vector<uint64_t> derive_seeds(uint64_t master, std::string_view domain, size_t n) {
   std::vector<uint64_t> out(n);
   for (size_t i = 0; i < n; ++i)
      out[i] = derive_seed(master, domain, i);
   return out;
}

}  // namespace flowtel

#endif
