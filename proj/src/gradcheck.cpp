#include "adaptlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "adaptlab/rng.hpp"
#include "adaptlab/vat.hpp"

namespace adaptlab::gradcheck {

namespace {

// Loss evaluators built from the forward path only.
double loss_value(const nn::Mlp& model, const Matrix& x, nn::LossKind kind,
                  const Matrix& targets) {
  const Matrix probs = nn::softmax(nn::forward(model, x).logits);
  switch (kind) {
    case nn::LossKind::cross_entropy:
    case nn::LossKind::soft_cross_entropy:
      return nn::soft_cross_entropy(probs, targets);
    case nn::LossKind::kl_to_reference: {
      double total = 0.0;
      for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        total += nn::kl_divergence(targets.row(i).transpose(),
                                   probs.row(i).transpose());
      }
      return total / static_cast<double>(probs.rows());
    }
  }
  throw ArgumentError("unknown loss kind");
}

Matrix random_matrix(int rows, int cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      m(i, j) = scale * rng.normal();
    }
  }
  return m;
}

Matrix random_distributions(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      m(i, j) = 0.05 + rng.uniform();  // bounded away from zero
      sum += m(i, j);
    }
    m.row(i) /= sum;
  }
  return m;
}

struct Arch {
  std::string label;
  std::vector<int> widths;
  nn::Activation activation;
};

CheckLine check_loss_kind(const std::string& kind_label, nn::LossKind kind,
                          const Arch& arch, const Options& options) {
  CheckLine line;
  line.name = kind_label + " " + arch.label;
  double worst = 0.0;
  for (int repeat = 0; repeat < 2; ++repeat) {
    const std::uint64_t seed =
        mix_seed(options.seed, fnv1a64(line.name) + static_cast<std::uint64_t>(repeat));
    Rng rng(seed);
    nn::Mlp model = nn::init_params(arch.widths, arch.activation,
                                    nn::InitScheme::fan_in_uniform, rng.next_u64());
    const int n = 4;
    const Matrix x = random_matrix(n, arch.widths.front(), rng, 1.0);
    Matrix targets;
    if (kind == nn::LossKind::cross_entropy) {
      std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
      for (auto& y : labels) {
        y = static_cast<std::int32_t>(rng.uniform_int(arch.widths.back()));
      }
      targets = nn::one_hot(labels, arch.widths.back());
    } else {
      targets = random_distributions(n, arch.widths.back(), rng);
    }

    nn::Gradients analytic = nn::backward(model, x, kind, targets).grads;
    if (options.tamper != 0.0) {
      analytic.layers[0].W(0, 0) += options.tamper;
    }
    const nn::Gradients numeric = numerical_gradient(
        model,
        [&x, kind, &targets](const nn::Mlp& m) {
          return loss_value(m, x, kind, targets);
        },
        options.step);
    worst = std::max(worst, max_relative_error(analytic, numeric));
  }
  line.max_rel_err = worst;
  line.pass = worst < options.tolerance;
  return line;
}

CheckLine check_vat_objective(int h, int c, const Options& options) {
  CheckLine line;
  line.name = "vat head[" + std::to_string(h) + "-" + std::to_string(c) + "]";
  double worst = 0.0;
  vat::VatConfig config;
  config.epsilon_rel = 0.1;
  config.alpha = 1.0;
  for (int repeat = 0; repeat < 2; ++repeat) {
    const std::uint64_t seed =
        mix_seed(options.seed, fnv1a64(line.name) + static_cast<std::uint64_t>(repeat));
    Rng rng(seed);
    nn::Mlp head = nn::init_params({h, c}, nn::Activation::identity,
                                   nn::InitScheme::fan_in_uniform, rng.next_u64());
    const int n = 5;
    const Matrix z = random_matrix(n, h, rng, 1.5);
    Matrix targets = random_distributions(n, c, rng);

    // The adversarial direction and the clean reference are constants of the
    // objective; rebuild them from the same stream the objective consumed.
    const std::uint64_t vat_seed = rng.next_u64();
    Rng objective_rng(vat_seed);
    vat::VatObjective objective =
        vat::vat_objective(head, z, targets, config, objective_rng);
    nn::Gradients analytic = std::move(objective.head_grads);
    if (options.tamper != 0.0) {
      analytic.layers[0].W(0, 0) += options.tamper;
    }

    Rng direction_rng(vat_seed);
    const Matrix directions = vat::adversarial_direction(head, z, config, direction_rng);
    const double epsilon_abs = config.epsilon_rel * z.rowwise().norm().mean();
    const Matrix p_clean = nn::softmax(nn::forward(head, z).logits);
    const Matrix perturbed = z + epsilon_abs * directions;

    const nn::Gradients numeric = numerical_gradient(
        head,
        [&](const nn::Mlp& m) {
          return loss_value(m, z, nn::LossKind::soft_cross_entropy, targets) +
                 config.alpha *
                     loss_value(m, perturbed, nn::LossKind::kl_to_reference, p_clean);
        },
        options.step);
    worst = std::max(worst, max_relative_error(analytic, numeric));
  }
  line.max_rel_err = worst;
  line.pass = worst < options.tolerance;
  return line;
}

}  // namespace

nn::Gradients numerical_gradient(nn::Mlp model, const LossFn& loss,
                                 double step) {
  if (!(step > 0.0)) {
    throw ArgumentError("numerical_gradient: step must be positive");
  }
  nn::Gradients grads;
  grads.layers.resize(model.layers.size());
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    nn::Layer& layer = model.layers[k];
    grads.layers[k].W = Matrix::Zero(layer.W.rows(), layer.W.cols());
    grads.layers[k].b = Vector::Zero(layer.b.size());
    for (Eigen::Index i = 0; i < layer.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.W.cols(); ++j) {
        const double saved = layer.W(i, j);
        layer.W(i, j) = saved + step;
        const double up = loss(model);
        layer.W(i, j) = saved - step;
        const double down = loss(model);
        layer.W(i, j) = saved;
        grads.layers[k].W(i, j) = (up - down) / (2.0 * step);
      }
    }
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) {
      const double saved = layer.b(i);
      layer.b(i) = saved + step;
      const double up = loss(model);
      layer.b(i) = saved - step;
      const double down = loss(model);
      layer.b(i) = saved;
      grads.layers[k].b(i) = (up - down) / (2.0 * step);
    }
  }
  return grads;
}

double max_relative_error(const nn::Gradients& analytic,
                          const nn::Gradients& numeric) {
  if (analytic.layers.size() != numeric.layers.size()) {
    throw ShapeError("max_relative_error: layer count mismatch");
  }
  double worst = 0.0;
  auto update = [&worst](double a, double f) {
    const double rel = std::abs(a - f) / std::max(std::abs(a) + std::abs(f), 1e-3);
    worst = std::max(worst, rel);
  };
  for (std::size_t k = 0; k < analytic.layers.size(); ++k) {
    const nn::Layer& a = analytic.layers[k];
    const nn::Layer& f = numeric.layers[k];
    for (Eigen::Index i = 0; i < a.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.W.cols(); ++j) {
        update(a.W(i, j), f.W(i, j));
      }
    }
    for (Eigen::Index i = 0; i < a.b.size(); ++i) {
      update(a.b(i), f.b(i));
    }
  }
  return worst;
}

std::vector<CheckLine> run_battery(const Options& options) {
  const std::vector<Arch> archs = {
      {"linear[5-3]", {5, 3}, nn::Activation::identity},
      {"relu[5-4-3]", {5, 4, 3}, nn::Activation::relu},
      {"tanh[6-5-3]", {6, 5, 3}, nn::Activation::tanh},
      {"relu[4-6-5-3]", {4, 6, 5, 3}, nn::Activation::relu},
  };
  std::vector<CheckLine> lines;
  for (const Arch& arch : archs) {
    lines.push_back(check_loss_kind("ce", nn::LossKind::cross_entropy, arch, options));
    lines.push_back(
        check_loss_kind("soft_ce", nn::LossKind::soft_cross_entropy, arch, options));
    lines.push_back(
        check_loss_kind("kl", nn::LossKind::kl_to_reference, arch, options));
  }
  lines.push_back(check_vat_objective(4, 3, options));
  lines.push_back(check_vat_objective(6, 2, options));
  return lines;
}

}  // namespace adaptlab::gradcheck
