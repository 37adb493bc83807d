#pragma once

#include <cmath>
#include <cstdint>

namespace fedcomm::util {

// splitmix64 finalizer; the basis for all seed derivation in the harness.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Order-sensitive combination of two seeds into one.
inline uint64_t mix(uint64_t a, uint64_t b) {
  return splitmix64(splitmix64(a) ^ (splitmix64(b ^ 0x6a09e667f3bcc909ull)));
}

inline uint64_t mix(uint64_t a, uint64_t b, uint64_t c) { return mix(mix(a, b), c); }

inline uint64_t mix(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return mix(mix(a, b, c), d);
}

// xoshiro256++: deterministic stream generator, identical on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ull;
      word = splitmix64(s);
    }
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; one value per call, pair cached.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Stateless Bernoulli decision keyed by (seed, a, b); used where decisions
// must not depend on evaluation order (e.g. per-datagram loss by chunk index).
inline bool keyed_bernoulli(uint64_t seed, uint64_t a, uint64_t b, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  const double u = double(mix(seed, a, b) >> 11) * 0x1.0p-53;
  return u < p;
}

}  // namespace fedcomm::util
