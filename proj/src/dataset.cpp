#include "adaptlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace adaptlab {

std::string role_to_string(Role role) {
  switch (role) {
    case Role::id_train:
      return "id_train";
    case Role::id_test:
      return "id_test";
    case Role::ood_test:
      return "ood_test";
    case Role::anomaly:
      return "anomaly";
    case Role::corrupted:
      return "corrupted";
  }
  throw ArgumentError("unknown role");
}

Role role_from_string(const std::string& text) {
  if (text == "id_train") return Role::id_train;
  if (text == "id_test") return Role::id_test;
  if (text == "ood_test") return Role::ood_test;
  if (text == "anomaly") return Role::anomaly;
  if (text == "corrupted") return Role::corrupted;
  throw ArgumentError("unknown role: " + text);
}

void Dataset::validate() const {
  if (rows() < 1 || dim() < 1) {
    throw ArgumentError("dataset '" + name + "': empty feature matrix");
  }
  if (!features.allFinite()) {
    throw ArgumentError("dataset '" + name + "': non-finite feature value");
  }
  if (role == Role::anomaly) {
    if (!labels.empty()) {
      throw ArgumentError("dataset '" + name + "': anomaly sets carry no labels");
    }
    if (num_classes != 0) {
      throw ArgumentError("dataset '" + name + "': anomaly sets use num_classes 0");
    }
  } else {
    if (num_classes < 1) {
      throw ArgumentError("dataset '" + name + "': num_classes must be positive");
    }
    if (static_cast<int>(labels.size()) != rows()) {
      throw ArgumentError("dataset '" + name + "': label count does not match rows");
    }
    for (std::int32_t y : labels) {
      if (y < 0 || y >= num_classes) {
        throw ArgumentError("dataset '" + name + "': label out of range");
      }
    }
  }
  if (role == Role::corrupted) {
    if (!corruption.has_value()) {
      throw ArgumentError("dataset '" + name + "': corrupted sets need a (family, severity) tag");
    }
    if (corruption->severity < 1 || corruption->severity > 5) {
      throw ArgumentError("dataset '" + name + "': corruption severity must be in 1..5");
    }
  } else if (corruption.has_value()) {
    throw ArgumentError("dataset '" + name + "': only corrupted sets carry a corruption tag");
  }
}

bool Dataset::storage_equals(const Dataset& other) const {
  return num_classes == other.num_classes && labels == other.labels &&
         features.rows() == other.features.rows() &&
         features.cols() == other.features.cols() && features == other.features;
}

void EvalSuite::validate() const {
  id_test.validate();
  ood_test.validate();
  if (id_test.role != Role::id_test) {
    throw ArgumentError("eval suite: id_test member has wrong role");
  }
  if (ood_test.role != Role::ood_test) {
    throw ArgumentError("eval suite: ood_test member has wrong role");
  }
  if (corrupted.empty()) {
    throw ArgumentError("eval suite: needs at least one corrupted set");
  }
  if (anomaly_sets.empty()) {
    throw ArgumentError("eval suite: needs at least one anomaly set");
  }
  const int d = id_test.dim();
  const int c = id_test.num_classes;
  if (ood_test.dim() != d || ood_test.num_classes != c) {
    throw ArgumentError("eval suite: ood_test dimensions disagree with id_test");
  }
  std::map<std::string, int> anomaly_names;
  for (const Dataset& set : corrupted) {
    set.validate();
    if (set.role != Role::corrupted) {
      throw ArgumentError("eval suite: corrupted member has wrong role");
    }
    if (set.dim() != d || set.num_classes != c) {
      throw ArgumentError("eval suite: corrupted set dimensions disagree");
    }
  }
  for (const Dataset& set : anomaly_sets) {
    set.validate();
    if (set.role != Role::anomaly) {
      throw ArgumentError("eval suite: anomaly member has wrong role");
    }
    if (set.dim() != d) {
      throw ArgumentError("eval suite: anomaly set dimension disagrees");
    }
    if (++anomaly_names[set.name] > 1) {
      throw ArgumentError("eval suite: duplicate anomaly set name '" + set.name + "'");
    }
  }
}

PredictionSet::PredictionSet(Matrix probs,
                             std::optional<std::vector<std::int32_t>> labels)
    : probs_(std::move(probs)), labels_(std::move(labels)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) {
    throw ArgumentError("prediction set: empty probability matrix");
  }
  for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < probs_.cols(); ++c) {
      const double p = probs_(i, c);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ArgumentError("prediction set: probability outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ArgumentError("prediction set: row does not sum to 1");
    }
  }
  if (labels_.has_value()) {
    if (static_cast<Eigen::Index>(labels_->size()) != probs_.rows()) {
      throw ArgumentError("prediction set: label count does not match rows");
    }
    for (std::int32_t y : *labels_) {
      if (y < 0 || y >= probs_.cols()) {
        throw ArgumentError("prediction set: label out of range");
      }
    }
  }
}

const std::vector<std::int32_t>& PredictionSet::labels() const {
  if (!labels_.has_value()) {
    throw ArgumentError("prediction set: labels absent");
  }
  return *labels_;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double fraction,
                                          std::uint64_t seed) {
  dataset.validate();
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ArgumentError("split_dataset: fraction must lie in (0, 1)");
  }
  if (dataset.rows() < 2) {
    throw ArgumentError("split_dataset: need at least 2 rows");
  }

  // Strata: one index list per class, or one list total when unlabeled.
  std::map<std::int32_t, std::vector<int>> strata;
  if (dataset.has_labels()) {
    for (int i = 0; i < dataset.rows(); ++i) {
      strata[dataset.labels[static_cast<std::size_t>(i)]].push_back(i);
    }
  } else {
    auto& all = strata[0];
    for (int i = 0; i < dataset.rows(); ++i) {
      all.push_back(i);
    }
  }

  Rng rng(seed);
  std::vector<int> first_idx;
  std::vector<int> second_idx;
  for (auto& [label, indices] : strata) {
    (void)label;
    const int count = static_cast<int>(indices.size());
    // Guard against fp slop in (1 - fraction) * count when the product is an
    // exact integer; the remainder always lands in the first part.
    const int second_count =
        static_cast<int>(std::floor((1.0 - fraction) * count + 1e-9));
    std::vector<int> shuffled(indices);
    const std::vector<int> order = rng.permutation(count);
    for (int i = 0; i < count; ++i) {
      shuffled[static_cast<std::size_t>(i)] =
          indices[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }
    for (int i = 0; i < count; ++i) {
      if (i < count - second_count) {
        first_idx.push_back(shuffled[static_cast<std::size_t>(i)]);
      } else {
        second_idx.push_back(shuffled[static_cast<std::size_t>(i)]);
      }
    }
  }
  std::sort(first_idx.begin(), first_idx.end());
  std::sort(second_idx.begin(), second_idx.end());

  auto take = [&dataset](const std::vector<int>& idx, const char* suffix) {
    Dataset part;
    part.name = dataset.name + suffix;
    part.role = dataset.role;
    part.corruption = dataset.corruption;
    part.num_classes = dataset.num_classes;
    part.features.resize(static_cast<Eigen::Index>(idx.size()), dataset.features.cols());
    part.labels.reserve(dataset.has_labels() ? idx.size() : 0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      part.features.row(static_cast<Eigen::Index>(i)) =
          dataset.features.row(idx[i]);
      if (dataset.has_labels()) {
        part.labels.push_back(dataset.labels[static_cast<std::size_t>(idx[i])]);
      }
    }
    return part;
  };

  return {take(first_idx, ".a"), take(second_idx, ".b")};
}

}  // namespace adaptlab
