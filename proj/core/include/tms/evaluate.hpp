#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tms/model.hpp"

namespace tms {

struct PredictionRecord {
  std::string id;
  double y_true = 0.0;
  /// Probability of the positive class, or the regression mean in the
  /// original target scale.
  double y_pred = 0.0;
  /// 2 / (alpha + beta) for classification, the Beta variance for regression.
  double uncertainty = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
};

/// Metric name to value; nullopt marks a metric that is undefined on the
/// given records (single-class AUC, zero-variance R^2 and Spearman).
using Metrics = std::map<std::string, std::optional<double>>;

inline constexpr double kDecisionThreshold = 0.5;

/// Mann-Whitney AUC with midranks for ties. Throws SingleClassAUC.
double auc(std::span<const PredictionRecord> records);
/// Keys AUC, ACC, F1, MCC. Positive call: y_pred >= 0.5.
Metrics classification_metrics(std::span<const PredictionRecord> records);

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> values);
/// Throws ZeroVariance when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);
/// Keys RMSE, MAE, R2, Spearman. Throws TooFewSamples below two records.
Metrics regression_metrics(std::span<const PredictionRecord> records);

Metrics compute_metrics(std::span<const PredictionRecord> records, Task task);
/// The metric a retention curve tracks by default.
std::string headline_metric(Task task);

/// 1.0, 0.9, ..., 0.1
std::vector<double> default_thresholds();

struct RetentionPoint {
  double threshold = 1.0;
  double fraction = 1.0;
  std::size_t retained = 0;
  Metrics metrics;
};

/// For each threshold u keeps records with uncertainty <= u. Empty retained
/// sets are omitted, as are thresholds retaining the same count as the
/// previous point, so fractions strictly decrease.
std::vector<RetentionPoint> retention_curve(std::span<const PredictionRecord> records, Task task,
                                            std::span<const double> thresholds);
/// Single-metric view: (fraction, value) pairs, skipping undefined values.
std::vector<std::pair<double, double>> retention_curve(std::span<const PredictionRecord> records, Task task,
                                                       const std::string& metric,
                                                       std::span<const double> thresholds);

struct RunReport {
  Task task = Task::Classification;
  Metrics metrics;
  std::vector<RetentionPoint> retention;
  std::vector<PredictionRecord> per_sample;

  static RunReport build(std::vector<PredictionRecord> records, Task task, std::span<const double> thresholds);
};

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> stddev;  // sample standard deviation; nullopt below two values
  std::size_t defined = 0;       // folds on which the metric was defined
};

/// Mean and standard deviation of each metric over folds, ignoring folds
/// where it was undefined.
std::map<std::string, MetricSummary> aggregate_folds(std::span<const RunReport> folds);

/// JSON text; `config_json` and `version` are embedded verbatim for provenance.
std::string report_json(const RunReport& report, const std::string& config_json, const std::string& version);
std::string aggregate_json(std::span<const RunReport> folds, const std::string& config_json,
                           const std::string& version);

void write_predictions_csv(std::ostream& os, std::span<const PredictionRecord> records);
void write_retention_csv(std::ostream& os, std::span<const RetentionPoint> curve, Task task);

}  // namespace tms
