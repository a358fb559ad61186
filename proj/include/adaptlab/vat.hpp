#pragma once

#include "adaptlab/common.hpp"
#include "adaptlab/nn.hpp"
#include "adaptlab/rng.hpp"

namespace adaptlab::vat {

struct VatConfig {
  // Perturbation radius as a fraction of the batch-mean penultimate norm, so
  // one setting works across feature scales.
  double epsilon_rel = 0.05;
  // Finite-difference probe scale, relative to each row's norm.
  double xi = 1e-6;
  int power_iters = 1;
  // Weight of the smoothness term in the training objective.
  double alpha = 1.0;

  void validate() const;
};

// Per-row adversarial directions on the head input, found by power iteration:
// start from a random unit vector, repeatedly move to the normalized gradient
// of KL(p(z) || p(z + xi ||z|| d)) with respect to the probe offset. Rows
// whose gradient norm underflows (constant-output heads, zero rows) keep
// their current random direction. Every returned row has unit norm.
Matrix adversarial_direction(const nn::Mlp& head, const Matrix& z,
                             const VatConfig& config, Rng& rng);

// Mean over rows of KL(p(z) || p(z + epsilon_abs * d)) with the clean branch
// treated as a constant. Zero at epsilon_abs = 0, never negative.
double lds_loss(const nn::Mlp& head, const Matrix& z, const Matrix& directions,
                double epsilon_abs);

struct VatObjective {
  double loss = 0.0;           // classification + alpha * smoothness
  nn::Gradients head_grads;    // with respect to head parameters only
  double lds = 0.0;            // the smoothness component alone
};

// Classification loss on clean inputs plus alpha times the smoothness loss at
// the adversarial perturbation. epsilon_abs = epsilon_rel * mean row norm of
// z, computed per batch. Gradients flow only through the perturbed branch of
// the KL term; with alpha = 0 this is exactly the plain objective and draws
// nothing from the rng.
VatObjective vat_objective(const nn::Mlp& head, const Matrix& z,
                           const Matrix& targets, const VatConfig& config,
                           Rng& rng);

}  // namespace adaptlab::vat
