#pragma once

#include <cstdint>
#include <random>

namespace ising::detail {

/// splitmix64 finalizer; derives independent stream seeds from
/// (seed, stream) so parallel work can reseed per item.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// mt19937_64 with hand-rolled draws. The standard distributions are
/// implementation-defined, so every derived draw is spelled out here to
/// keep outputs byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform index in [0, n). Modulo bias is below n * 2^-64, far under
  /// anything observable at the sizes used here.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(gen_() % n);
  }

  int spin() { return (gen_() & 1) ? 1 : -1; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ising::detail
