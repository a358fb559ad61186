#include "adaptlab/vat.hpp"

#include <cmath>

namespace adaptlab::vat {

namespace {
constexpr double kGradNormFloor = 1e-12;
}

void VatConfig::validate() const {
  if (!(epsilon_rel > 0.0)) {
    throw ArgumentError("vat: epsilon_rel must be positive");
  }
  if (!(xi > 0.0)) {
    throw ArgumentError("vat: xi must be positive");
  }
  if (power_iters < 1) {
    throw ArgumentError("vat: power_iters must be at least 1");
  }
  if (!(alpha >= 0.0)) {
    throw ArgumentError("vat: alpha must be nonnegative");
  }
}

Matrix adversarial_direction(const nn::Mlp& head, const Matrix& z,
                             const VatConfig& config, Rng& rng) {
  config.validate();
  if (z.cols() != head.input_dim()) {
    throw ShapeError("vat: penultimate width does not match head input");
  }
  const Eigen::Index n = z.rows();
  const Eigen::Index h = z.cols();

  Matrix directions(n, h);
  for (Eigen::Index i = 0; i < n; ++i) {
    directions.row(i) = rng.unit_vector(static_cast<int>(h)).transpose();
  }

  const Matrix p_clean = nn::softmax(nn::forward(head, z).logits);
  Vector probe_scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    probe_scale(i) = config.xi * z.row(i).norm();
  }

  for (int iter = 0; iter < config.power_iters; ++iter) {
    Matrix probe = z;
    for (Eigen::Index i = 0; i < n; ++i) {
      probe.row(i) += probe_scale(i) * directions.row(i);
    }
    const nn::BackwardResult back = nn::backward(
        head, probe, nn::LossKind::kl_to_reference, p_clean,
        /*want_input_gradient=*/true);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = back.input_gradient.row(i).norm();
      if (norm >= kGradNormFloor) {
        directions.row(i) = back.input_gradient.row(i) / norm;
      }
      // Underflow keeps the current random direction; the smoothness loss is
      // then (near) zero for that row.
    }
  }
  return directions;
}

double lds_loss(const nn::Mlp& head, const Matrix& z, const Matrix& directions,
                double epsilon_abs) {
  if (directions.rows() != z.rows() || directions.cols() != z.cols()) {
    throw ShapeError("lds_loss: direction shape mismatch");
  }
  if (!(epsilon_abs >= 0.0)) {
    throw ArgumentError("lds_loss: epsilon_abs must be nonnegative");
  }
  const Matrix p_clean = nn::softmax(nn::forward(head, z).logits);
  const Matrix p_pert =
      nn::softmax(nn::forward(head, (z + epsilon_abs * directions).eval()).logits);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    total += nn::kl_divergence(p_clean.row(i).transpose(),
                               p_pert.row(i).transpose());
  }
  return total / static_cast<double>(z.rows());
}

VatObjective vat_objective(const nn::Mlp& head, const Matrix& z,
                           const Matrix& targets, const VatConfig& config,
                           Rng& rng) {
  config.validate();
  nn::BackwardResult clean =
      nn::backward(head, z, nn::LossKind::soft_cross_entropy, targets);

  VatObjective result;
  if (config.alpha == 0.0) {
    result.loss = clean.loss;
    result.head_grads = std::move(clean.grads);
    return result;
  }

  const Matrix directions = adversarial_direction(head, z, config, rng);
  const double epsilon_abs = config.epsilon_rel * z.rowwise().norm().mean();
  const Matrix p_clean = nn::softmax(nn::forward(head, z).logits);
  const Matrix perturbed = z + epsilon_abs * directions;
  const nn::BackwardResult smooth =
      nn::backward(head, perturbed, nn::LossKind::kl_to_reference, p_clean);

  result.lds = smooth.loss;
  result.loss = clean.loss + config.alpha * smooth.loss;
  result.head_grads = std::move(clean.grads);
  nn::axpy(result.head_grads, config.alpha, smooth.grads);
  return result;
}

}  // namespace adaptlab::vat
