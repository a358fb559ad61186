#include "adaptlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adaptlab::metrics {

namespace {

int argmax_lowest(const Matrix& probs, Eigen::Index row) {
  int best = 0;
  double best_value = probs(row, 0);
  for (Eigen::Index c = 1; c < probs.cols(); ++c) {
    if (probs(row, c) > best_value) {
      best_value = probs(row, c);
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

double accuracy(const PredictionSet& preds) {
  const auto& labels = preds.labels();  // throws when absent
  const Matrix& probs = preds.probs();
  int correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (argmax_lowest(probs, i) == labels[static_cast<std::size_t>(i)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

double mean_corruption_accuracy(
    const std::map<CorruptionKey, PredictionSet>& per_corruption_preds) {
  if (per_corruption_preds.empty()) {
    throw ArgumentError("mean_corruption_accuracy: empty cell map");
  }
  double total = 0.0;
  for (const auto& [key, preds] : per_corruption_preds) {
    (void)key;
    total += accuracy(preds);
  }
  return total / static_cast<double>(per_corruption_preds.size());
}

double rms_calibration_error(const PredictionSet& preds, int bins) {
  if (bins < 1) {
    throw ArgumentError("rms_calibration_error: bins must be positive");
  }
  const auto& labels = preds.labels();
  const Matrix& probs = preds.probs();
  const int n = static_cast<int>(probs.rows());

  struct Row {
    double confidence;
    bool correct;
  };
  std::vector<Row> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int predicted = argmax_lowest(probs, i);
    rows.push_back(Row{probs.row(i).maxCoeff(),
                       predicted == labels[static_cast<std::size_t>(i)]});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.confidence < b.confidence; });

  // Equal-mass bins; the first (n mod bins) bins take one extra row.
  const int base = n / bins;
  const int extra = n % bins;
  double sum = 0.0;
  int cursor = 0;
  for (int b = 0; b < bins; ++b) {
    const int size = base + (b < extra ? 1 : 0);
    if (size == 0) {
      continue;
    }
    double conf = 0.0;
    double acc = 0.0;
    for (int i = 0; i < size; ++i) {
      conf += rows[static_cast<std::size_t>(cursor + i)].confidence;
      acc += rows[static_cast<std::size_t>(cursor + i)].correct ? 1.0 : 0.0;
    }
    conf /= size;
    acc /= size;
    const double gap = conf - acc;
    sum += (static_cast<double>(size) / n) * gap * gap;
    cursor += size;
  }
  return std::sqrt(sum);
}

double auroc(std::span<const double> id_scores,
             std::span<const double> anomaly_scores) {
  if (id_scores.empty() || anomaly_scores.empty()) {
    throw ArgumentError("auroc: score vectors must be nonempty");
  }
  struct Entry {
    double score;
    bool is_id;
  };
  std::vector<Entry> entries;
  entries.reserve(id_scores.size() + anomaly_scores.size());
  for (double s : id_scores) {
    entries.push_back(Entry{s, true});
  }
  for (double s : anomaly_scores) {
    entries.push_back(Entry{s, false});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Midranks over tie groups give the half credit for equal scores.
  const std::size_t total = entries.size();
  double id_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j + 1 < total && entries[j + 1].score == entries[i].score) {
      ++j;
    }
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (entries[k].is_id) {
        id_rank_sum += midrank;
      }
    }
    i = j + 1;
  }
  const double n_id = static_cast<double>(id_scores.size());
  const double n_anom = static_cast<double>(anomaly_scores.size());
  const double u = id_rank_sum - n_id * (n_id + 1.0) / 2.0;
  return u / (n_id * n_anom);
}

std::vector<double> msp_scores(const PredictionSet& preds) {
  const Matrix& probs = preds.probs();
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    scores.push_back(probs.row(i).maxCoeff());
  }
  return scores;
}

PredictionSet predict(const nn::Mlp& model, const Dataset& dataset) {
  if (dataset.dim() != model.input_dim()) {
    throw ShapeError("predict: dataset dimension does not match model input");
  }
  const Matrix features = dataset.features.cast<double>();
  const Matrix probs = nn::softmax(nn::forward(model, features).logits);
  std::optional<std::vector<std::int32_t>> labels;
  if (dataset.has_labels()) {
    labels = dataset.labels;
  }
  return PredictionSet(probs, std::move(labels));
}

MetricsReport evaluate_all(const nn::Mlp& model, const EvalSuite& suite,
                           int bins) {
  suite.validate();
  if (suite.dim() != model.input_dim()) {
    throw ShapeError("evaluate_all: suite dimension does not match model input");
  }

  MetricsReport report;
  const PredictionSet id_preds = predict(model, suite.id_test);
  report.id_acc = accuracy(id_preds);
  report.rmse_calibration = rms_calibration_error(id_preds, bins);
  report.ood_acc = accuracy(predict(model, suite.ood_test));

  std::map<CorruptionKey, PredictionSet> corruption_preds;
  for (const Dataset& set : suite.corrupted) {
    corruption_preds.emplace(
        CorruptionKey{set.corruption->family, set.corruption->severity},
        predict(model, set));
  }
  for (const auto& [key, preds] : corruption_preds) {
    report.per_corruption_acc[key] = accuracy(preds);
  }
  report.mca = mean_corruption_accuracy(corruption_preds);

  const std::vector<double> id_scores = msp_scores(id_preds);
  double auroc_total = 0.0;
  for (const Dataset& set : suite.anomaly_sets) {
    const double value = auroc(id_scores, msp_scores(predict(model, set)));
    report.auroc_per_set[set.name] = value;
    auroc_total += value;
  }
  report.auroc_mean = auroc_total / static_cast<double>(suite.anomaly_sets.size());
  return report;
}

}  // namespace adaptlab::metrics
