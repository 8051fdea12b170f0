#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace a2v {

// splitmix64 generator. Deterministic across platforms, unlike the standard
// distributions, which is what makes seeded pipelines byte-reproducible.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n >= 1
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double normal() {
    // Box-Muller; one value per call keeps the state trajectory simple
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Knuth's product method; fine for the small rates used here
  long poisson(double lambda) {
    if (lambda <= 0) return 0;
    if (lambda > 60) {
      // normal approximation for large rates
      double v = std::round(lambda + std::sqrt(lambda) * normal());
      return v < 0 ? 0 : static_cast<long>(v);
    }
    double limit = std::exp(-lambda);
    double p = 1.0;
    long k = 0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // independent stream for a sub-task, e.g. one fold of a CV run
  Rng fork(std::uint64_t salt) {
    return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL));
  }

private:
  std::uint64_t state_;
};

} // namespace a2v
