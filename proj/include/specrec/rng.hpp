// specrec/rng.hpp

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <random>

namespace specrec {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seeded generator with platform-independent uniform draws. std::mt19937_64
// output is pinned by the standard; the distributions below avoid the
// implementation-defined std::uniform_* wrappers so results are reproducible
// byte-for-byte across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : base_(seed), gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0. Modulo bias is irrelevant here
  // (n << 2^64) and the simple form keeps draws reproducible.
  std::uint64_t uniform_int(std::uint64_t n) { return gen_() % n; }

  // Standard normal via Box-Muller (deterministic draw order).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Derive an independent stream; deterministic in (base seed, id).
  Rng fork(std::uint64_t stream_id) const {
    return Rng(splitmix64(base_ ^ (0xA24BAED4963EE407ULL * (stream_id + 1))));
  }

 private:
  std::uint64_t base_;
  std::mt19937_64 gen_;
};

}  // namespace specrec
