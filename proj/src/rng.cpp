#include "adaptlab/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace adaptlab {

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n <= 0) {
    throw ArgumentError("uniform_int: n must be positive");
  }
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  // Accept only draws below the largest multiple of `range`.
  const std::uint64_t rem =
      (std::numeric_limits<std::uint64_t>::max() % range + 1) % range;
  if (rem == 0) {
    return static_cast<std::int64_t>(next_u64() % range);
  }
  const std::uint64_t bound = std::numeric_limits<std::uint64_t>::max() - rem;
  std::uint64_t v = next_u64();
  while (v > bound) {
    v = next_u64();
  }
  return static_cast<std::int64_t>(v % range);
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double shape) {
  if (shape <= 0.0) {
    throw ArgumentError("gamma: shape must be positive");
  }
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    const double u = 1.0 - uniform();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) {
      continue;
    }
    v = v * v * v;
    const double u = 1.0 - uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

double Rng::beta(double a, double b) {
  const double ga = gamma(a);
  const double gb = gamma(b);
  const double sum = ga + gb;
  if (sum <= 0.0) {
    return 0.5;
  }
  return ga / sum;
}

std::vector<int> Rng::permutation(int n) {
  if (n < 0) {
    throw ArgumentError("permutation: n must be nonnegative");
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    perm[static_cast<std::size_t>(i)] = i;
  }
  for (int i = n - 1; i > 0; --i) {
    const auto j = uniform_int(i + 1);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

Vector Rng::normal_vector(int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    v(i) = normal();
  }
  return v;
}

Vector Rng::unit_vector(int dim) {
  for (;;) {
    Vector v = normal_vector(dim);
    const double norm = v.norm();
    if (norm > 1e-12) {
      return v / norm;
    }
  }
}

}  // namespace adaptlab
