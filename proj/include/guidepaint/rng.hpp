#ifndef GUIDEPAINT_RNG_HPP_
#define GUIDEPAINT_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace guidepaint {

// splitmix64: stateless mixing step, used both as a stream RNG and for
// deriving per-sample seeds. Unlike std:: distributions its output is
// identical on every platform, which the dataset / training determinism
// contracts rely on.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Combine a base seed with stream indices (e.g. (run_seed, step, slot)).
inline uint64_t seed_combine(uint64_t a, uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 1)));
}
inline uint64_t seed_combine(uint64_t a, uint64_t b, uint64_t c) {
  return seed_combine(seed_combine(a, b), c);
}

// Small deterministic RNG with explicit float construction (no
// implementation-defined std:: distributions).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  uint64_t next_u64() {
    state_ = splitmix64(state_);
    return state_;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  int uniform_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(uniform_int(static_cast<uint64_t>(hi_inclusive - lo + 1)));
  }

  // Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  uint64_t state_;
};

}  // namespace guidepaint

#endif  // GUIDEPAINT_RNG_HPP_
