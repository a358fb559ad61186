#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "adaptlab/common.hpp"

namespace adaptlab {

// Deterministic random source. Every sampler is built directly on the
// mt19937_64 bit stream; the standard-library distribution objects are
// avoided because their output is implementation-defined, which would break
// bitwise reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n). Rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t n);

  // Standard normal via Box-Muller. Two uniforms per draw, no caching, so
  // the stream position is a pure function of the call count.
  double normal();

  // Gamma(shape, 1) via Marsaglia-Tsang, with the boost trick for shape < 1.
  double gamma(double shape);

  double beta(double a, double b);

  // Fisher-Yates permutation of [0, n).
  std::vector<int> permutation(int n);

  Vector normal_vector(int dim);

  Vector unit_vector(int dim);

 private:
  std::mt19937_64 engine_;
};

}  // namespace adaptlab
