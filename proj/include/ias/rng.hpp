#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ias {

/// SplitMix64 step; used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic RNG wrapper. All sampling goes through hand-rolled
/// transforms (not std distributions, whose outputs are
/// implementation-defined) so that a seed pins the byte-identical stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Substream for episode `index` of a dataset seeded with `master`.
  /// Reproducible independent of scheduling or generation order.
  static Rng substream(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng(splitmix64(s));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    // Rejection-free modulo is biased for large n; n here is always tiny
    // (action counts, lattice axes), so 64-bit modulo bias is negligible --
    // but use rejection anyway to keep the stream exactly uniform.
    const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % static_cast<std::uint64_t>(n));
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= bound);
    return static_cast<int>(x % static_cast<std::uint64_t>(n));
  }

  /// Categorical draw by CDF scan over (not necessarily normalized) weights.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  /// Symmetric Dirichlet(1,...,1): uniform over the simplex.
  std::vector<double> uniform_simplex(int dim) {
    std::vector<double> x(dim);
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
      double u = uniform();
      if (u <= 0.0) u = 0x1.0p-53;
      x[i] = -std::log(u);
      total += x[i];
    }
    for (double& xi : x) xi /= total;
    return x;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ias
