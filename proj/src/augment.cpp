#include "adaptlab/augment.hpp"

#include <cmath>

#include "adaptlab/nn.hpp"

namespace adaptlab::augment {

namespace {

void check_partner(const std::vector<int>& partner, Eigen::Index n) {
  if (static_cast<Eigen::Index>(partner.size()) != n) {
    throw ShapeError("augment: partner permutation length mismatch");
  }
  for (int p : partner) {
    if (p < 0 || p >= n) {
      throw ArgumentError("augment: partner index out of range");
    }
  }
}

}  // namespace

std::string kind_to_string(Kind kind) {
  switch (kind) {
    case Kind::mixup:
      return "mixup";
    case Kind::cutmix:
      return "cutmix";
    case Kind::gaussian_noise:
      return "noise";
    case Kind::cutout:
      return "cutout";
    case Kind::none:
      return "none";
  }
  throw ArgumentError("unknown augmentation kind");
}

Kind kind_from_string(const std::string& text) {
  if (text == "mixup") return Kind::mixup;
  if (text == "cutmix") return Kind::cutmix;
  if (text == "noise") return Kind::gaussian_noise;
  if (text == "cutout") return Kind::cutout;
  if (text == "none") return Kind::none;
  throw ConfigError("unknown augmentation kind: " + text);
}

void AugmentPolicy::validate() const {
  if (!(apply_probability >= 0.0 && apply_probability <= 1.0)) {
    throw ArgumentError("augment policy: apply_probability must lie in [0, 1]");
  }
  switch (kind) {
    case Kind::mixup:
    case Kind::cutmix:
      if (!(alpha > 0.0)) {
        throw ArgumentError("augment policy: alpha must be positive");
      }
      break;
    case Kind::gaussian_noise:
      if (!(sigma > 0.0)) {
        throw ArgumentError("augment policy: sigma must be positive");
      }
      break;
    case Kind::cutout:
      if (!(mask_fraction > 0.0 && mask_fraction < 1.0)) {
        throw ArgumentError("augment policy: mask_fraction must lie in (0, 1)");
      }
      break;
    case Kind::none:
      break;
  }
}

AugmentedBatch mixup_blend(const Matrix& features, const Matrix& targets,
                           const std::vector<int>& partner, double lambda) {
  const Eigen::Index n = features.rows();
  check_partner(partner, n);
  if (targets.rows() != n) {
    throw ShapeError("mixup: target row count mismatch");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ArgumentError("mixup: lambda must lie in [0, 1]");
  }
  AugmentedBatch out;
  out.features.resize(n, features.cols());
  out.soft_targets.resize(n, targets.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = partner[static_cast<std::size_t>(i)];
    out.features.row(i) = lambda * features.row(i) + (1.0 - lambda) * features.row(j);
    out.soft_targets.row(i) = lambda * targets.row(i) + (1.0 - lambda) * targets.row(j);
  }
  out.used_soft_labels = true;
  return out;
}

AugmentedBatch mixup(const Matrix& features,
                     std::span<const std::int32_t> labels, int num_classes,
                     double alpha, Rng& rng) {
  if (features.rows() < 2) {
    throw ArgumentError("mixup: need at least 2 rows");
  }
  if (!(alpha > 0.0)) {
    throw ArgumentError("mixup: alpha must be positive");
  }
  const double lambda = rng.beta(alpha, alpha);
  const std::vector<int> partner = rng.permutation(static_cast<int>(features.rows()));
  return mixup_blend(features, nn::one_hot(labels, num_classes), partner, lambda);
}

AugmentedBatch cutmix_block(const Matrix& features, const Matrix& targets,
                            const std::vector<int>& partner,
                            const std::vector<int>& starts, int block_len) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  check_partner(partner, n);
  if (static_cast<Eigen::Index>(starts.size()) != n) {
    throw ShapeError("cutmix: starts length mismatch");
  }
  if (block_len < 0 || block_len > d) {
    throw ArgumentError("cutmix: block length out of range");
  }
  AugmentedBatch out;
  out.features = features;
  const double partner_weight = static_cast<double>(block_len) / static_cast<double>(d);
  out.soft_targets.resize(n, targets.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int start = starts[static_cast<std::size_t>(i)];
    if (start < 0 || start + block_len > d) {
      throw ArgumentError("cutmix: block start out of range");
    }
    const Eigen::Index j = partner[static_cast<std::size_t>(i)];
    if (block_len > 0) {
      out.features.row(i).segment(start, block_len) =
          features.row(j).segment(start, block_len);
    }
    out.soft_targets.row(i) =
        (1.0 - partner_weight) * targets.row(i) + partner_weight * targets.row(j);
  }
  out.used_soft_labels = true;
  return out;
}

AugmentedBatch cutmix(const Matrix& features,
                      std::span<const std::int32_t> labels, int num_classes,
                      double alpha, Rng& rng) {
  if (features.rows() < 2 || features.cols() < 2) {
    throw ArgumentError("cutmix: need at least 2 rows and 2 coordinates");
  }
  if (!(alpha > 0.0)) {
    throw ArgumentError("cutmix: alpha must be positive");
  }
  const Eigen::Index n = features.rows();
  const int d = static_cast<int>(features.cols());
  const double lambda = rng.beta(alpha, alpha);
  const int block_len = static_cast<int>(std::floor(lambda * d));
  const std::vector<int> partner = rng.permutation(static_cast<int>(n));
  std::vector<int> starts(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    starts[static_cast<std::size_t>(i)] =
        static_cast<int>(rng.uniform_int(d - block_len + 1));
  }
  return cutmix_block(features, nn::one_hot(labels, num_classes), partner,
                      starts, block_len);
}

AugmentedBatch gaussian_noise(const Matrix& features,
                              std::span<const std::int32_t> labels,
                              int num_classes, double sigma, Rng& rng) {
  if (!(sigma > 0.0)) {
    throw ArgumentError("gaussian_noise: sigma must be positive");
  }
  AugmentedBatch out;
  out.soft_targets = nn::one_hot(labels, num_classes);
  out.features = features;
  const double mean_norm = features.rowwise().norm().mean();
  const double scale = sigma * mean_norm / std::sqrt(static_cast<double>(features.cols()));
  for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.features.cols(); ++j) {
      out.features(i, j) += scale * rng.normal();
    }
  }
  out.used_soft_labels = false;
  return out;
}

AugmentedBatch cutout(const Matrix& features,
                      std::span<const std::int32_t> labels, int num_classes,
                      double mask_fraction, Rng& rng) {
  if (!(mask_fraction > 0.0 && mask_fraction < 1.0)) {
    throw ArgumentError("cutout: mask_fraction must lie in (0, 1)");
  }
  const int d = static_cast<int>(features.cols());
  const int block_len = static_cast<int>(std::floor(mask_fraction * d));
  AugmentedBatch out;
  out.features = features;
  out.soft_targets = nn::one_hot(labels, num_classes);
  out.used_soft_labels = false;
  for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
    const int start = static_cast<int>(rng.uniform_int(d - block_len + 1));
    if (block_len > 0) {
      out.features.row(i).segment(start, block_len).setZero();
    }
  }
  return out;
}

AugmentedBatch apply_policy(const AugmentPolicy& policy, const Matrix& features,
                            const Matrix& targets, Rng& rng,
                            long* applications) {
  policy.validate();
  AugmentedBatch pass_through{features, targets, false};
  if (policy.kind == Kind::none) {
    return pass_through;
  }
  if (rng.uniform() >= policy.apply_probability) {
    return pass_through;
  }
  const Eigen::Index n = features.rows();
  const int d = static_cast<int>(features.cols());
  AugmentedBatch out;
  switch (policy.kind) {
    case Kind::mixup: {
      if (n < 2) {
        return pass_through;  // single-row batches cannot interpolate
      }
      const double lambda = rng.beta(policy.alpha, policy.alpha);
      out = mixup_blend(features, targets, rng.permutation(static_cast<int>(n)),
                        lambda);
      break;
    }
    case Kind::cutmix: {
      if (n < 2 || d < 2) {
        return pass_through;
      }
      const double lambda = rng.beta(policy.alpha, policy.alpha);
      const int block_len = static_cast<int>(std::floor(lambda * d));
      std::vector<int> starts(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        starts[static_cast<std::size_t>(i)] =
            static_cast<int>(rng.uniform_int(d - block_len + 1));
      }
      out = cutmix_block(features, targets, rng.permutation(static_cast<int>(n)),
                         starts, block_len);
      break;
    }
    case Kind::gaussian_noise: {
      out.features = features;
      const double mean_norm = features.rowwise().norm().mean();
      const double scale =
          policy.sigma * mean_norm / std::sqrt(static_cast<double>(d));
      for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.features.cols(); ++j) {
          out.features(i, j) += scale * rng.normal();
        }
      }
      out.soft_targets = targets;
      out.used_soft_labels = false;
      break;
    }
    case Kind::cutout: {
      const int block_len = static_cast<int>(std::floor(policy.mask_fraction * d));
      out.features = features;
      out.soft_targets = targets;
      out.used_soft_labels = false;
      for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
        const int start = static_cast<int>(rng.uniform_int(d - block_len + 1));
        if (block_len > 0) {
          out.features.row(i).segment(start, block_len).setZero();
        }
      }
      break;
    }
    case Kind::none:
      return pass_through;
  }
  if (applications != nullptr) {
    ++*applications;
  }
  return out;
}

}  // namespace adaptlab::augment
