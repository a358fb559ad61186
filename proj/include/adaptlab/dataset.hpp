#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptlab/common.hpp"
#include "adaptlab/rng.hpp"

namespace adaptlab {

enum class Role { id_train, id_test, ood_test, anomaly, corrupted };

std::string role_to_string(Role role);
Role role_from_string(const std::string& text);

struct CorruptionTag {
  std::string family;
  int severity = 1;  // 1..5
};

// A labeled embedding matrix with a role tag. Anomaly sets are label-free by
// construction and carry num_classes == 0.
struct Dataset {
  std::string name;
  Role role = Role::id_train;
  std::optional<CorruptionTag> corruption;
  MatrixF features;                  // n x d, float32 to match the file layout
  std::vector<std::int32_t> labels;  // empty for anomaly sets
  int num_classes = 0;

  int rows() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  bool has_labels() const { return !labels.empty(); }

  // Throws ArgumentError on any invariant violation.
  void validate() const;

  // Equality over the persisted payload (features, labels, num_classes).
  bool storage_equals(const Dataset& other) const;
};

// The full evaluation battery for one adapted model.
struct EvalSuite {
  Dataset id_test;
  Dataset ood_test;
  std::vector<Dataset> corrupted;
  std::vector<Dataset> anomaly_sets;

  int dim() const { return id_test.dim(); }
  int num_classes() const { return id_test.num_classes; }

  void validate() const;
};

// Class probabilities for a batch, optionally paired with ground truth.
// Row-sum and range invariants are enforced at construction.
class PredictionSet {
 public:
  PredictionSet(Matrix probs, std::optional<std::vector<std::int32_t>> labels);

  const Matrix& probs() const { return probs_; }
  bool has_labels() const { return labels_.has_value(); }
  const std::vector<std::int32_t>& labels() const;

  int rows() const { return static_cast<int>(probs_.rows()); }
  int num_classes() const { return static_cast<int>(probs_.cols()); }

 private:
  Matrix probs_;
  std::optional<std::vector<std::int32_t>> labels_;
};

// Stratified split: per class, the second part receives
// floor((1 - fraction) * count) rows and the remainder stays in the first.
// Label-free datasets are treated as a single stratum. Deterministic in seed.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double fraction,
                                          std::uint64_t seed);

}  // namespace adaptlab
