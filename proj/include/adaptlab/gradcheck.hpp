#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adaptlab/nn.hpp"

namespace adaptlab::gradcheck {

struct Options {
  double step = 1e-4;       // central-difference step
  double tolerance = 1e-4;  // max relative error allowed
  // Test hook: added to one analytic gradient entry so the detector itself
  // can be exercised. Zero in production.
  double tamper = 0.0;
  std::uint64_t seed = 94071;
};

struct CheckLine {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

using LossFn = std::function<double(const nn::Mlp&)>;

// Central finite differences over every parameter. Evaluates the loss
// closure only, so the estimate is independent of the analytic backward
// path it verifies.
nn::Gradients numerical_gradient(nn::Mlp model, const LossFn& loss,
                                 double step);

// max over entries of |a - f| / max(|a| + |f|, 1e-3). The absolute floor
// keeps finite-difference noise on true-zero gradients from registering as
// relative error.
double max_relative_error(const nn::Gradients& analytic,
                          const nn::Gradients& numeric);

// The full verification battery: every loss kind across several
// architectures plus the VAT objective on linear heads, two seeds each.
// One line per (loss kind, architecture) pair.
std::vector<CheckLine> run_battery(const Options& options);

}  // namespace adaptlab::gradcheck
