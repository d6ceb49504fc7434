#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nrp {

// Derives an independent child seed from a root seed and a stream tag.
// All randomness in a run flows from one root seed; each concern (init,
// shuffle, dropout, index generation) draws from its own derived stream so
// that changing one does not perturb the others.
inline uint64_t derive_seed(uint64_t root, uint64_t stream) {
  // splitmix64 finalizer over the combined value
  uint64_t z = root + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace seed_stream {
inline constexpr uint64_t kInit = 1;
inline constexpr uint64_t kShuffle = 2;
inline constexpr uint64_t kDropout = 3;
inline constexpr uint64_t kIndices = 4;
}  // namespace seed_stream

// Deterministic RNG. The distribution transforms are implemented here rather
// than with std::*_distribution, whose output is implementation-defined; the
// same seed must reproduce the same stream on any standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), rejection-sampled to avoid modulo bias
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // standard normal via Box-Muller, one spare cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nrp
