#ifndef FLOWTEL_MODMATH_HPP
#define FLOWTEL_MODMATH_HPP

#include <cstdint>

namespace flowtel {

// Largest Mersenne prime below 2^62; leaves headroom for 48-bit flow IDs
// plus a 8..12-bit fingerprint in the extended ID.
inline constexpr uint64_t kDefaultPrime = (uint64_t(1) << 61) - 1;

// (a * b) mod p with a 128-bit intermediate so the product cannot wrap.
inline uint64_t mul_mod(uint64_t a, uint64_t b, uint64_t p) {
   return uint64_t((unsigned __int128)a * b % p);
}

inline uint64_t add_mod(uint64_t a, uint64_t b, uint64_t p) {
   uint64_t s = a + b;
   if (s >= p || s < a)
      s -= p;
   return s;
}

inline uint64_t sub_mod(uint64_t a, uint64_t b, uint64_t p) {
   return a >= b ? a - b : a + (p - b);
}

uint64_t pow_mod(uint64_t base, uint64_t exp, uint64_t p);

// Multiplicative inverse a^(p-2) mod p, valid for prime p.
// Throws NoInverse when a is congruent to 0.
uint64_t mod_inverse(uint64_t a, uint64_t p);

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime(uint64_t n);

// Signed value reduced into [0, p).
inline uint64_t reduce_mod(int64_t v, uint64_t p) {
   int64_t r = v % (int64_t)p;
   if (r < 0)
      r += (int64_t)p;
   return (uint64_t)r;
}

}  // namespace flowtel

#endif
