#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaptlab/dataset.hpp"
#include "adaptlab/nn.hpp"

namespace adaptlab::synth {

// Desk-scale benchmark: class-conditional Gaussian mixtures. The source task
// sits midway between the ID and OOD tasks, whose class means are rotated and
// shifted apart by shift_strength, so the discriminative directions overlap
// only partially. A trunk fit to the source serves both test distributions
// equally until adaptation distorts it toward one of them.
struct SynthSpec {
  int input_dim = 16;
  int num_classes = 4;
  std::vector<int> trunk_widths = {32, 16};
  int n_train = 2000;
  int n_test = 2000;
  double shift_strength = 1.0;
  std::vector<std::string> corruption_families = {"gauss", "uniform", "scale",
                                                  "mask", "shift"};
  int severities = 5;
  int pretrain_epochs = 30;
  std::uint64_t seed = 7;

  void validate() const;
};

// Class means actually used by the generator, exposed so closed-form Bayes
// classifiers can be built against the task.
struct GroundTruth {
  Matrix source_means;  // C x d
  Matrix id_means;      // C x d
  Matrix ood_means;     // C x d
  double noise_sigma = 1.0;
};

struct SynthTask {
  Dataset source;
  Dataset id_train;
  EvalSuite suite;
  GroundTruth truth;
};

SynthTask generate_task(const SynthSpec& spec);

// Severity-monotone perturbation of a dataset's features. Families:
//   gauss    additive Gaussian noise, per-coordinate std 0.08 s rho
//   uniform  additive uniform noise on [-0.14 s rho, 0.14 s rho]
//   scale    whole-row scaling by (1 +- 0.1 s), sign random per row
//   mask     per-coordinate zeroing with probability 0.05 s
//   shift    a fixed random direction of norm 0.12 s nu
// where nu is the dataset's mean row norm and rho = nu / sqrt(d).
// Severity 0 returns the dataset unchanged (test hook).
Dataset corrupt(const Dataset& dataset, const std::string& family,
                int severity, std::uint64_t seed);

// Trains trunk plus a temporary classifier on the source task, then drops the
// classifier. The returned trunk ends with width trunk_widths.back().
nn::Mlp pretrain_trunk(const Dataset& source, const std::vector<int>& widths,
                       int epochs, std::uint64_t seed);

}  // namespace adaptlab::synth
