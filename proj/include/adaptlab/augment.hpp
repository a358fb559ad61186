#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adaptlab/common.hpp"
#include "adaptlab/rng.hpp"

namespace adaptlab::augment {

// Feature-space diversity augmentations. mixup and cutmix interpolate labels
// and therefore produce soft targets; noise and cutout keep labels hard.
enum class Kind { mixup, cutmix, gaussian_noise, cutout, none };

std::string kind_to_string(Kind kind);
Kind kind_from_string(const std::string& text);

struct AugmentPolicy {
  Kind kind = Kind::none;
  double alpha = 1.0;          // mixup / cutmix Beta(alpha, alpha)
  double sigma = 0.1;          // gaussian_noise scale, relative
  double mask_fraction = 0.25; // cutout block fraction of d
  double apply_probability = 1.0;

  void validate() const;
};

struct AugmentedBatch {
  Matrix features;      // n x d
  Matrix soft_targets;  // n x C, rows sum to 1
  bool used_soft_labels = false;
};

// lambda x_i + (1 - lambda) x_{partner(i)}, targets combined with the same
// lambda. Deterministic core shared by mixup and the tests.
AugmentedBatch mixup_blend(const Matrix& features, const Matrix& targets,
                           const std::vector<int>& partner, double lambda);

// One lambda ~ Beta(alpha, alpha) per batch and a sampled partner permutation.
AugmentedBatch mixup(const Matrix& features,
                     std::span<const std::int32_t> labels, int num_classes,
                     double alpha, Rng& rng);

// Copies a contiguous coordinate block from the partner row; target weight of
// the partner equals block_len / d. starts holds one block start per row.
AugmentedBatch cutmix_block(const Matrix& features, const Matrix& targets,
                            const std::vector<int>& partner,
                            const std::vector<int>& starts, int block_len);

// Block length floor(lambda * d) with lambda ~ Beta(alpha, alpha), one per
// batch; block starts uniform per row.
AugmentedBatch cutmix(const Matrix& features,
                      std::span<const std::int32_t> labels, int num_classes,
                      double alpha, Rng& rng);

// Adds iid zero-mean Gaussian noise with per-coordinate standard deviation
// sigma * (mean row norm / sqrt(d)). Labels stay hard.
AugmentedBatch gaussian_noise(const Matrix& features,
                              std::span<const std::int32_t> labels,
                              int num_classes, double sigma, Rng& rng);

// Zeroes floor(mask_fraction * d) contiguous coordinates per row. Labels stay
// hard.
AugmentedBatch cutout(const Matrix& features,
                      std::span<const std::int32_t> labels, int num_classes,
                      double mask_fraction, Rng& rng);

// Applies the policy's kind with probability apply_probability; otherwise
// returns the batch unchanged with the incoming targets. Increments
// *applications on every actual application (used by placement checks).
AugmentedBatch apply_policy(const AugmentPolicy& policy, const Matrix& features,
                            const Matrix& targets, Rng& rng,
                            long* applications);

}  // namespace adaptlab::augment
