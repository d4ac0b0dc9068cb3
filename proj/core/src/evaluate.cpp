#include "tms/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tms/error.hpp"
#include "tms/train.hpp"

namespace tms {

using nlohmann::json;

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double auc(std::span<const PredictionRecord> records) {
  std::vector<double> scores;
  double n_pos = 0.0, rank_sum = 0.0;
  for (const auto& r : records) scores.push_back(r.y_pred);
  const auto ranks = average_ranks(scores);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].y_true > 0.5) {
      n_pos += 1.0;
      rank_sum += ranks[i];
    }
  }
  const double n_neg = static_cast<double>(records.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) {
    throw Error(Errc::SingleClassAUC, "AUC needs both classes (" + std::to_string(static_cast<long>(n_pos)) +
                                          " positive, " + std::to_string(static_cast<long>(n_neg)) + " negative)");
  }
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

Metrics classification_metrics(std::span<const PredictionRecord> records) {
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (const auto& r : records) {
    const bool truth = r.y_true > 0.5, call = r.y_pred >= kDecisionThreshold;
    if (truth && call) ++tp;
    else if (truth) ++fn;
    else if (call) ++fp;
    else ++tn;
  }
  Metrics m;
  try {
    m["AUC"] = auc(records);
  } catch (const Error&) {
    m["AUC"] = std::nullopt;
  }
  const double n = tp + tn + fp + fn;
  m["ACC"] = n > 0 ? std::optional((tp + tn) / n) : std::nullopt;
  const double f1_den = 2 * tp + fp + fn;
  m["F1"] = f1_den > 0 ? 2 * tp / f1_den : 0.0;
  const double mcc_den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  m["MCC"] = mcc_den > 0 ? (tp * tn - fp * fn) / mcc_den : 0.0;
  return m;
}

namespace {

double variance_sum(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::BatchMismatch, "spearman inputs differ in length");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double sx = variance_sum(rx), sy = variance_sum(ry);
  if (x.size() < 2 || sx == 0.0 || sy == 0.0) throw Error(Errc::ZeroVariance, "spearman of a constant sequence");
  const double mean = (static_cast<double>(x.size()) + 1.0) / 2.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) cov += (rx[i] - mean) * (ry[i] - mean);
  return cov / std::sqrt(sx * sy);
}

Metrics regression_metrics(std::span<const PredictionRecord> records) {
  if (records.size() < 2) throw Error(Errc::TooFewSamples, "regression metrics need at least two records");
  std::vector<double> t, p;
  double se = 0.0, ae = 0.0;
  for (const auto& r : records) {
    t.push_back(r.y_true);
    p.push_back(r.y_pred);
    se += (r.y_pred - r.y_true) * (r.y_pred - r.y_true);
    ae += std::abs(r.y_pred - r.y_true);
  }
  const double n = static_cast<double>(records.size());
  Metrics m;
  m["RMSE"] = std::sqrt(se / n);
  m["MAE"] = ae / n;
  const double ss_tot = variance_sum(t);
  m["R2"] = ss_tot > 0.0 ? std::optional(1.0 - se / ss_tot) : std::nullopt;
  try {
    m["Spearman"] = spearman(t, p);
  } catch (const Error&) {
    m["Spearman"] = std::nullopt;
  }
  return m;
}

Metrics compute_metrics(std::span<const PredictionRecord> records, Task task) {
  if (task == Task::Classification) return classification_metrics(records);
  if (records.size() < 2) {
    return {{"RMSE", std::nullopt}, {"MAE", std::nullopt}, {"R2", std::nullopt}, {"Spearman", std::nullopt}};
  }
  return regression_metrics(records);
}

std::string headline_metric(Task task) { return task == Task::Classification ? "ACC" : "RMSE"; }

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 10; i >= 1; --i) t.push_back(i / 10.0);
  return t;
}

std::vector<RetentionPoint> retention_curve(std::span<const PredictionRecord> records, Task task,
                                            std::span<const double> thresholds) {
  std::vector<RetentionPoint> curve;
  std::vector<PredictionRecord> kept;
  for (double u : thresholds) {
    kept.clear();
    for (const auto& r : records) {
      if (r.uncertainty <= u) kept.push_back(r);
    }
    if (kept.empty()) continue;
    if (!curve.empty() && curve.back().retained <= kept.size()) continue;
    RetentionPoint p;
    p.threshold = u;
    p.retained = kept.size();
    p.fraction = static_cast<double>(kept.size()) / static_cast<double>(records.size());
    p.metrics = compute_metrics(kept, task);
    curve.push_back(std::move(p));
  }
  return curve;
}

std::vector<std::pair<double, double>> retention_curve(std::span<const PredictionRecord> records, Task task,
                                                       const std::string& metric,
                                                       std::span<const double> thresholds) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : retention_curve(records, task, thresholds)) {
    const auto it = p.metrics.find(metric);
    if (it == p.metrics.end()) throw Error(Errc::ConfigError, "unknown metric '" + metric + "'");
    if (it->second) out.emplace_back(p.fraction, *it->second);
  }
  return out;
}

RunReport RunReport::build(std::vector<PredictionRecord> records, Task task, std::span<const double> thresholds) {
  RunReport r;
  r.task = task;
  r.metrics = compute_metrics(records, task);
  r.retention = retention_curve(records, task, thresholds);
  r.per_sample = std::move(records);
  return r;
}

std::map<std::string, MetricSummary> aggregate_folds(std::span<const RunReport> folds) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& f : folds) {
    for (const auto& [name, v] : f.metrics) {
      auto& bucket = values[name];
      if (v) bucket.push_back(*v);
    }
  }
  std::map<std::string, MetricSummary> out;
  for (const auto& [name, v] : values) {
    MetricSummary s;
    s.defined = v.size();
    if (!v.empty()) {
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      s.mean = mean;
      if (v.size() >= 2) s.stddev = std::sqrt(variance_sum(v) / static_cast<double>(v.size() - 1));
    }
    out[name] = s;
  }
  return out;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(); }

json metrics_json(const Metrics& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = opt(v);
  return j;
}

json config_value(const std::string& config_json) {
  try {
    return json::parse(config_json);
  } catch (const json::exception&) {
    return config_json;
  }
}

json report_body(const RunReport& report) {
  json retention = json::array();
  for (const auto& p : report.retention) {
    retention.push_back(
        {{"threshold", p.threshold}, {"fraction", p.fraction}, {"retained", p.retained}, {"metrics", metrics_json(p.metrics)}});
  }
  json samples = json::array();
  for (const auto& r : report.per_sample) {
    samples.push_back({{"id", r.id},
                       {"y_true", r.y_true},
                       {"y_pred", r.y_pred},
                       {"uncertainty", r.uncertainty},
                       {"alpha", r.alpha},
                       {"beta", r.beta}});
  }
  return {{"task", to_string(report.task)},
          {"metrics", metrics_json(report.metrics)},
          {"retention_curve", retention},
          {"per_sample", samples}};
}

}  // namespace

std::string report_json(const RunReport& report, const std::string& config_json, const std::string& version) {
  json j = report_body(report);
  j["config"] = config_value(config_json);
  j["version"] = version;
  return j.dump(2);
}

std::string aggregate_json(std::span<const RunReport> folds, const std::string& config_json,
                           const std::string& version) {
  json summary = json::object();
  for (const auto& [name, s] : aggregate_folds(folds)) {
    summary[name] = {{"mean", opt(s.mean)}, {"std", opt(s.stddev)}, {"folds_defined", s.defined}};
  }
  json per_fold = json::array();
  for (const auto& f : folds) per_fold.push_back(metrics_json(f.metrics));
  json j{{"task", folds.empty() ? "" : to_string(folds.front().task)},
         {"folds", folds.size()},
         {"summary", summary},
         {"per_fold", per_fold},
         {"config", config_value(config_json)},
         {"version", version}};
  return j.dump(2);
}

void write_predictions_csv(std::ostream& os, std::span<const PredictionRecord> records) {
  os.precision(17);
  os << "id,y_true,y_pred,uncertainty,alpha,beta\n";
  for (const auto& r : records) {
    os << csv_escape(r.id) << ',' << r.y_true << ',' << r.y_pred << ',' << r.uncertainty << ',' << r.alpha << ',' << r.beta
       << '\n';
  }
}

void write_retention_csv(std::ostream& os, std::span<const RetentionPoint> curve, Task task) {
  const std::vector<std::string> names = task == Task::Classification
                                             ? std::vector<std::string>{"AUC", "ACC", "F1", "MCC"}
                                             : std::vector<std::string>{"RMSE", "MAE", "R2", "Spearman"};
  os.precision(17);
  os << "threshold,fraction,retained";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (const auto& p : curve) {
    os << p.threshold << ',' << p.fraction << ',' << p.retained;
    for (const auto& n : names) {
      os << ',';
      const auto it = p.metrics.find(n);
      if (it != p.metrics.end() && it->second) os << *it->second;
    }
    os << '\n';
  }
}

}  // namespace tms
