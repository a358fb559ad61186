#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaptlab/dataset.hpp"
#include "adaptlab/nn.hpp"

namespace adaptlab::metrics {

using CorruptionKey = std::pair<std::string, int>;  // (family, severity)

// One table row of the safety evaluation.
struct MetricsReport {
  double id_acc = 0.0;
  double ood_acc = 0.0;
  double mca = 0.0;
  double rmse_calibration = 0.0;
  double auroc_mean = 0.0;
  std::map<std::string, double> auroc_per_set;
  std::map<CorruptionKey, double> per_corruption_acc;
};

// Fraction of rows where argmax(probs) equals the label. Argmax ties break
// toward the lowest class index.
double accuracy(const PredictionSet& preds);

// Unweighted mean accuracy over all (family, severity) cells.
double mean_corruption_accuracy(
    const std::map<CorruptionKey, PredictionSet>& per_corruption_preds);

// Confidence is the per-row maximum probability. Rows are sorted by
// confidence into `bins` equal-mass bins (remainders fill the earliest bins)
// and the result is sqrt(sum_b (n_b / n) (mean_conf_b - acc_b)^2).
double rms_calibration_error(const PredictionSet& preds, int bins);

// Probability that a random id score exceeds a random anomaly score, ties
// counted as half. Computed from midranks; equal to brute-force pair
// counting.
double auroc(std::span<const double> id_scores,
             std::span<const double> anomaly_scores);

// Maximum softmax probability per row; higher means more in-distribution.
std::vector<double> msp_scores(const PredictionSet& preds);

// Runs the model over every suite member and fills a full report:
// accuracy on id/ood, calibration on id, accuracy per corruption cell, and
// MSP-based AUROC of the id test set against each anomaly set.
MetricsReport evaluate_all(const nn::Mlp& model, const EvalSuite& suite,
                           int bins);

// Forward + softmax over a dataset, labels attached when present.
PredictionSet predict(const nn::Mlp& model, const Dataset& dataset);

}  // namespace adaptlab::metrics
