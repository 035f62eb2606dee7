#include "flowtel/modmath.hpp"

#include "flowtel/errors.hpp"

namespace flowtel {

uint64_t pow_mod(uint64_t base, uint64_t exp, uint64_t p) {
   uint64_t result = 1 % p;
   base %= p;
   while (exp > 0) {
      if (exp & 1)
         result = mul_mod(result, base, p);
      base = mul_mod(base, base, p);
      exp >>= 1;
   }
   return result;
}

uint64_t mod_inverse(uint64_t a, uint64_t p) {
   a %= p;
   if (a == 0)
      throw no_inverse("no inverse for 0 mod p");
   return pow_mod(a, p - 2, p);
}

namespace {

bool miller_rabin(uint64_t n, uint64_t a, uint64_t d, int r) {
   uint64_t x = pow_mod(a, d, n);
   if (x == 1 || x == n - 1)
      return true;
   for (int i = 1; i < r; ++i) {
      x = mul_mod(x, x, n);
      if (x == n - 1)
         return true;
   }
   return false;
}

}  // namespace

bool is_prime(uint64_t n) {
   if (n < 2)
      return false;
   for (uint64_t q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
      if (n == q)
         return true;
      if (n % q == 0)
         return false;
   }
   uint64_t d = n - 1;
   int r = 0;
   while ((d & 1) == 0) {
      d >>= 1;
      ++r;
   }
   // This witness set decides primality exactly for every n < 2^64.
   for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
      if (!miller_rabin(n, a % n, d, r))
         return false;
   }
   return true;
}

}  // namespace flowtel
