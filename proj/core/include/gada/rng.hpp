#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "gada/tensor.hpp"

namespace gada {

/// Deterministic random stream. Wraps mt19937_64 but applies its own
/// uniform/gaussian transforms: std::uniform_real_distribution and
/// std::normal_distribution are implementation-defined, which would break
/// bitwise reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  Index uniform_int(Index n) {
    require(n > 0, "rng: uniform_int needs n > 0");
    return static_cast<Index>(eng_() % static_cast<std::uint64_t>(n));
  }

  /// Standard gaussian via Box-Muller; caches the paired draw.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Tensor gaussian_tensor(Shape shape, double sigma) {
    Tensor t(std::move(shape));
    for (double& v : t.values) v = sigma * gaussian();
    return t;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent stream seed from a base seed and a tag, so the
/// draw order of one component cannot perturb another.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = base ^ 0x9e3779b97f4a7c15ull;
  for (char c : tag) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
  }
  h ^= h >> 31;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 33;
  return h;
}

}  // namespace gada
