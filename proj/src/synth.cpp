#include "adaptlab/synth.hpp"

#include <algorithm>
#include <cmath>

namespace adaptlab::synth {

namespace {

constexpr double kWithinClassSigma = 1.0;
constexpr double kSourceSigma = 1.3;
constexpr double kMeanRadius = 4.5;
// Per unit of shift_strength: rotation angle of every coordinate plane and
// the per-class mean offset between the ID and OOD tasks.
constexpr double kRotationPerUnit = 0.4;
constexpr double kMeanOffsetPerUnit = 1.5;

constexpr std::uint64_t kStructureSalt = 10;
constexpr std::uint64_t kSourceSalt = 11;
constexpr std::uint64_t kIdTrainSalt = 12;
constexpr std::uint64_t kIdTestSalt = 13;
constexpr std::uint64_t kOodTestSalt = 14;
constexpr std::uint64_t kAnomalySalt = 20;
constexpr std::uint64_t kCorruptSalt = 40;
constexpr std::uint64_t kPretrainInitSalt = 1;
constexpr std::uint64_t kPretrainShuffleSalt = 2;

// Orthonormal class directions when C <= d, plain unit vectors otherwise.
Matrix class_directions(int num_classes, int dim, Rng& rng) {
  Matrix dirs(num_classes, dim);
  for (int c = 0; c < num_classes; ++c) {
    Vector v = rng.normal_vector(dim);
    if (num_classes <= dim) {
      for (int prev = 0; prev < c; ++prev) {
        v -= dirs.row(prev).transpose() * dirs.row(prev).dot(v.transpose());
      }
    }
    const double norm = v.norm();
    if (norm < 1e-9) {
      --c;  // resample a degenerate draw
      continue;
    }
    dirs.row(c) = (v / norm).transpose();
  }
  return dirs;
}

// Rotation by `angle` in disjoint coordinate planes taken from a seeded
// permutation. Exactly the identity at angle 0.
Matrix rotate_rows(const Matrix& rows, const std::vector<int>& plane_order,
                   double angle) {
  Matrix out = rows;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t k = 0; k + 1 < plane_order.size(); k += 2) {
    const int p = plane_order[k];
    const int q = plane_order[k + 1];
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double a = out(i, p);
      const double b = out(i, q);
      out(i, p) = c * a - s * b;
      out(i, q) = s * a + c * b;
    }
  }
  return out;
}

std::vector<std::int32_t> balanced_labels(int n, int num_classes, Rng& rng) {
  std::vector<std::int32_t> labels;
  labels.reserve(static_cast<std::size_t>(n));
  const int base = n / num_classes;
  const int extra = n % num_classes;
  for (int c = 0; c < num_classes; ++c) {
    const int count = base + (c < extra ? 1 : 0);
    labels.insert(labels.end(), static_cast<std::size_t>(count),
                  static_cast<std::int32_t>(c));
  }
  const std::vector<int> order = rng.permutation(n);
  std::vector<std::int32_t> shuffled(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    shuffled[static_cast<std::size_t>(i)] =
        labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  return shuffled;
}

Dataset sample_mixture(const std::string& name, Role role, const Matrix& means,
                       double sigma, int n, Rng& rng) {
  const int num_classes = static_cast<int>(means.rows());
  const int dim = static_cast<int>(means.cols());
  Dataset dataset;
  dataset.name = name;
  dataset.role = role;
  dataset.num_classes = num_classes;
  dataset.labels = balanced_labels(n, num_classes, rng);
  dataset.features.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    const int label = dataset.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < dim; ++j) {
      dataset.features(i, j) =
          static_cast<float>(means(label, j) + sigma * rng.normal());
    }
  }
  return dataset;
}

Dataset make_anomaly(const std::string& name, int n, int dim,
                     double data_norm, const std::string& flavor, Rng& rng) {
  Dataset dataset;
  dataset.name = name;
  dataset.role = Role::anomaly;
  dataset.num_classes = 0;
  dataset.features.resize(n, dim);
  if (flavor == "shell") {
    for (int i = 0; i < n; ++i) {
      const double radius = std::abs(2.2 * data_norm + 0.2 * data_norm * rng.normal());
      const Vector direction = rng.unit_vector(dim);
      for (int j = 0; j < dim; ++j) {
        dataset.features(i, j) = static_cast<float>(radius * direction(j));
      }
    }
  } else if (flavor == "cube") {
    const double half_width = data_norm * std::sqrt(3.0 / dim);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) {
        dataset.features(i, j) =
            static_cast<float>(rng.uniform(-half_width, half_width));
      }
    }
  } else if (flavor == "blob") {
    const Vector center = 1.5 * data_norm * rng.unit_vector(dim);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) {
        dataset.features(i, j) =
            static_cast<float>(center(j) + 0.3 * rng.normal());
      }
    }
  } else {
    throw ArgumentError("unknown anomaly flavor: " + flavor);
  }
  return dataset;
}

}  // namespace

void SynthSpec::validate() const {
  if (input_dim < 2) {
    throw ArgumentError("synth: input_dim must be at least 2");
  }
  if (num_classes < 2) {
    throw ArgumentError("synth: num_classes must be at least 2");
  }
  if (trunk_widths.empty()) {
    throw ArgumentError("synth: trunk_widths must be nonempty");
  }
  for (int w : trunk_widths) {
    if (w < 1) {
      throw ArgumentError("synth: trunk widths must be positive");
    }
  }
  if (n_train < num_classes || n_test < num_classes) {
    throw ArgumentError("synth: need at least one sample per class");
  }
  if (shift_strength < 0.0) {
    throw ArgumentError("synth: shift_strength must be nonnegative");
  }
  if (severities < 1 || severities > 5) {
    throw ArgumentError("synth: severities must lie in 1..5");
  }
  if (corruption_families.empty()) {
    throw ArgumentError("synth: corruption_families must be nonempty");
  }
  if (pretrain_epochs < 0) {
    throw ArgumentError("synth: pretrain_epochs must be nonnegative");
  }
}

SynthTask generate_task(const SynthSpec& spec) {
  spec.validate();

  Rng structure_rng(mix_seed(spec.seed, kStructureSalt));
  const Matrix directions =
      class_directions(spec.num_classes, spec.input_dim, structure_rng);
  const Matrix base_means = kMeanRadius * directions;
  const std::vector<int> plane_order = structure_rng.permutation(spec.input_dim);

  const double angle = kRotationPerUnit * spec.shift_strength;
  const double offset = kMeanOffsetPerUnit * spec.shift_strength;
  Matrix offset_dirs(spec.num_classes, spec.input_dim);
  for (int c = 0; c < spec.num_classes; ++c) {
    offset_dirs.row(c) = structure_rng.unit_vector(spec.input_dim).transpose();
  }

  GroundTruth truth;
  truth.source_means = base_means;
  truth.id_means =
      rotate_rows(base_means, plane_order, -angle / 2.0) - (offset / 2.0) * offset_dirs;
  truth.ood_means =
      rotate_rows(base_means, plane_order, angle / 2.0) + (offset / 2.0) * offset_dirs;
  truth.noise_sigma = kWithinClassSigma;

  SynthTask task;
  task.truth = truth;
  {
    Rng rng(mix_seed(spec.seed, kSourceSalt));
    task.source = sample_mixture("source", Role::id_train, truth.source_means,
                                 kSourceSigma, spec.n_train, rng);
  }
  {
    Rng rng(mix_seed(spec.seed, kIdTrainSalt));
    task.id_train = sample_mixture("id_train", Role::id_train, truth.id_means,
                                   kWithinClassSigma, spec.n_train, rng);
  }
  {
    Rng rng(mix_seed(spec.seed, kIdTestSalt));
    task.suite.id_test = sample_mixture("id_test", Role::id_test, truth.id_means,
                                        kWithinClassSigma, spec.n_test, rng);
  }
  {
    Rng rng(mix_seed(spec.seed, kOodTestSalt));
    task.suite.ood_test = sample_mixture("ood_test", Role::ood_test,
                                         truth.ood_means, kWithinClassSigma,
                                         spec.n_test, rng);
  }

  for (const std::string& family : spec.corruption_families) {
    for (int severity = 1; severity <= spec.severities; ++severity) {
      const std::uint64_t corrupt_seed = mix_seed(
          spec.seed, kCorruptSalt + fnv1a64(family) * 8 + static_cast<std::uint64_t>(severity));
      task.suite.corrupted.push_back(
          corrupt(task.suite.id_test, family, severity, corrupt_seed));
    }
  }

  const double data_norm = task.suite.id_test.features.cast<double>().rowwise().norm().mean();
  const std::vector<std::string> flavors = {"shell", "cube", "blob"};
  for (std::size_t i = 0; i < flavors.size(); ++i) {
    Rng rng(mix_seed(spec.seed, kAnomalySalt + i));
    task.suite.anomaly_sets.push_back(make_anomaly(
        "anomaly_" + flavors[i], spec.n_test, spec.input_dim, data_norm,
        flavors[i], rng));
  }

  task.source.validate();
  task.id_train.validate();
  task.suite.validate();
  return task;
}

Dataset corrupt(const Dataset& dataset, const std::string& family,
                int severity, std::uint64_t seed) {
  dataset.validate();
  if (severity == 0) {
    return dataset;  // identity, test hook
  }
  if (severity < 1 || severity > 5) {
    throw ArgumentError("corrupt: severity must lie in 1..5");
  }
  const bool known = family == "gauss" || family == "uniform" ||
                     family == "scale" || family == "mask" || family == "shift";
  if (!known) {
    throw ArgumentError("corrupt: unknown family '" + family + "'");
  }

  Rng rng(seed);
  Matrix features = dataset.features.cast<double>();
  const int n = static_cast<int>(features.rows());
  const int dim = static_cast<int>(features.cols());
  const double data_norm = features.rowwise().norm().mean();
  const double per_coord = data_norm / std::sqrt(static_cast<double>(dim));
  const double s = static_cast<double>(severity);

  if (family == "gauss") {
    const double std_dev = 0.08 * s * per_coord;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) {
        features(i, j) += std_dev * rng.normal();
      }
    }
  } else if (family == "uniform") {
    const double bound = 0.14 * s * per_coord;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) {
        features(i, j) += rng.uniform(-bound, bound);
      }
    }
  } else if (family == "scale") {
    for (int i = 0; i < n; ++i) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      features.row(i) *= 1.0 + 0.1 * s * sign;
    }
  } else if (family == "mask") {
    const double drop = 0.05 * s;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) {
        if (rng.uniform() < drop) {
          features(i, j) = 0.0;
        }
      }
    }
  } else {  // shift
    const Vector direction = rng.unit_vector(dim);
    const double norm = 0.12 * s * data_norm;
    for (int i = 0; i < n; ++i) {
      features.row(i) += norm * direction.transpose();
    }
  }

  Dataset out;
  out.name = dataset.name + "/" + family + "_s" + std::to_string(severity);
  out.role = Role::corrupted;
  out.corruption = CorruptionTag{family, severity};
  out.features = features.cast<float>();
  out.labels = dataset.labels;
  out.num_classes = dataset.num_classes;
  out.validate();
  return out;
}

nn::Mlp pretrain_trunk(const Dataset& source, const std::vector<int>& widths,
                       int epochs, std::uint64_t seed) {
  source.validate();
  if (!source.has_labels()) {
    throw ArgumentError("pretrain_trunk: source task must be labeled");
  }
  if (widths.empty()) {
    throw ArgumentError("pretrain_trunk: widths must be nonempty");
  }
  std::vector<int> chain;
  chain.push_back(source.dim());
  chain.insert(chain.end(), widths.begin(), widths.end());
  chain.push_back(source.num_classes);
  nn::Mlp net = nn::init_params(chain, nn::Activation::relu,
                                nn::InitScheme::fan_in_uniform,
                                mix_seed(seed, kPretrainInitSalt));

  nn::OptimConfig optim;
  optim.learning_rate = 0.05;
  optim.momentum = 0.9;
  optim.batch_size = 128;
  nn::MomentumState state = nn::MomentumState::zeros_like(net);

  const Matrix features = source.features.cast<double>();
  const int n = source.rows();
  Rng shuffle_rng(mix_seed(seed, kPretrainShuffleSalt));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<int> order = shuffle_rng.permutation(n);
    for (int start = 0; start < n; start += optim.batch_size) {
      const int size = std::min(optim.batch_size, n - start);
      Matrix batch(size, source.dim());
      std::vector<std::int32_t> labels(static_cast<std::size_t>(size));
      for (int i = 0; i < size; ++i) {
        const int row = order[static_cast<std::size_t>(start + i)];
        batch.row(i) = features.row(row);
        labels[static_cast<std::size_t>(i)] =
            source.labels[static_cast<std::size_t>(row)];
      }
      const nn::BackwardResult back = nn::backward(net, batch, labels);
      nn::sgd_step(net, back.grads, state, optim);
    }
  }

  nn::Mlp trunk;
  trunk.activation = net.activation;
  trunk.layers.assign(net.layers.begin(), net.layers.end() - 1);
  return trunk;
}

}  // namespace adaptlab::synth
