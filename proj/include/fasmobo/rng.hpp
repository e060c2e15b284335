#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fasmobo/common.hpp"

namespace fasmobo {

/// SplitMix64 finalizer, used to derive labeled sub-stream seeds so that
/// adding a new rng consumer never perturbs existing streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t substream_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(master ^ hash_label(label));
  h = mix64(h ^ mix64(a));
  return mix64(h ^ mix64(b + 0x517cc1b727220a95ULL));
}

/// Seeded random stream. All transforms are hand-rolled on top of
/// std::mt19937_64 so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng substream(std::string_view label, std::uint64_t a = 0, std::uint64_t b = 0) const {
    return Rng(substream_seed(seed_, label, a, b));
  }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return lo + static_cast<std::int64_t>(eng_());  // full 64-bit span
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % range);
  }

  /// Standard normal via Box-Muller; one value per call so the stream
  /// position is independent of caller interleavings.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Circularly symmetric complex Gaussian with E|x|^2 = variance.
  Complex complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    return Complex(s * normal(), s * normal());
  }

  /// k distinct indices from [0, n), uniform over ordered k-subsets.
  std::vector<int> sample_distinct(int n, int k) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
      const int j = static_cast<int>(uniform_int(i, n - 1));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  /// Uniform direction on the unit sphere in R^dim.
  Vec unit_sphere(int dim) {
    Vec u(dim);
    double norm2 = 0.0;
    do {
      for (int i = 0; i < dim; ++i) u[i] = normal();
      norm2 = u.squaredNorm();
    } while (norm2 == 0.0);
    return u / std::sqrt(norm2);
  }

  std::string save_state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void load_state(const std::string& state) {
    std::istringstream is(state);
    is >> eng_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace fasmobo
