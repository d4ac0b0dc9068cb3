#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tms/error.hpp"
#include "tms/evaluate.hpp"
#include "tms/rng.hpp"

using tms::PredictionRecord;

namespace {

std::vector<PredictionRecord> records(const std::vector<double>& y, const std::vector<double>& p,
                                      const std::vector<double>& u = {}) {
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    out.push_back({std::to_string(i), y[i], p[i], u.empty() ? 0.5 : u[i], 1.0, 1.0});
  }
  return out;
}

double brute_force_auc(const std::vector<PredictionRecord>& r) {
  double concordant = 0.0, pairs = 0.0;
  for (const auto& a : r) {
    for (const auto& b : r) {
      if (a.y_true > 0.5 && b.y_true < 0.5) {
        pairs += 1.0;
        concordant += a.y_pred > b.y_pred ? 1.0 : (a.y_pred == b.y_pred ? 0.5 : 0.0);
      }
    }
  }
  return concordant / pairs;
}

}  // namespace

TEST(Classification, PerfectAndFlipped) {
  const auto perfect = tms::classification_metrics(records({1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1}));
  for (const char* k : {"AUC", "ACC", "F1", "MCC"}) EXPECT_EQ(*perfect.at(k), 1.0) << k;
  const auto flipped = tms::classification_metrics(records({1, 1, 0, 0}, {0.1, 0.2, 0.8, 0.9}));
  EXPECT_EQ(*flipped.at("MCC"), -1.0);
  EXPECT_EQ(*flipped.at("AUC"), 0.0);
}

TEST(Classification, HandAuc) {
  const auto r = records({1, 1, 0, 0}, {0.9, 0.4, 0.6, 0.1});
  EXPECT_DOUBLE_EQ(tms::auc(r), 0.75);
  EXPECT_DOUBLE_EQ(brute_force_auc(r), 0.75);
}

TEST(Classification, AucMatchesBruteForceWithTies) {
  tms::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng.below(2));
      p[i] = static_cast<double>(rng.below(7)) / 6.0;  // coarse grid forces ties
    }
    y[0] = 1;
    y[1] = 0;
    const auto r = records(y, p);
    EXPECT_NEAR(tms::auc(r), brute_force_auc(r), 1e-12);
  }
}

TEST(Classification, SingleClassAucIsUndefined) {
  const auto r = records({1, 1, 1}, {0.2, 0.9, 0.7});
  EXPECT_FALSE(tms::classification_metrics(r).at("AUC").has_value());
  try {
    tms::auc(r);
    FAIL();
  } catch (const tms::Error& e) {
    EXPECT_EQ(e.code(), tms::Errc::SingleClassAUC);
  }
}

TEST(Classification, ZeroDenominatorMccIsZero) {
  const auto m = tms::classification_metrics(records({1, 0, 1}, {0.9, 0.8, 0.7}));
  EXPECT_EQ(*m.at("MCC"), 0.0);
}

TEST(Classification, RangesAndOrderInvariance) {
  tms::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(50);
    std::vector<double> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng.below(2));
      p[i] = rng.uniform();
    }
    auto r = records(y, p);
    const auto m = tms::classification_metrics(r);
    EXPECT_GE(*m.at("MCC"), -1.0);
    EXPECT_LE(*m.at("MCC"), 1.0);
    EXPECT_GE(*m.at("F1"), 0.0);
    EXPECT_LE(*m.at("F1"), 1.0);
    rng.shuffle(std::span<PredictionRecord>(r));
    const auto again = tms::classification_metrics(r);
    for (const auto& [k, v] : m) {
      ASSERT_EQ(v.has_value(), again.at(k).has_value());
      if (v) EXPECT_NEAR(*v, *again.at(k), 1e-12) << k;
    }
  }
}

TEST(Regression, IdentityAndReversal) {
  const auto same = tms::regression_metrics(records({1, 2, 3, 4}, {1, 2, 3, 4}));
  EXPECT_EQ(*same.at("RMSE"), 0.0);
  EXPECT_EQ(*same.at("MAE"), 0.0);
  EXPECT_EQ(*same.at("R2"), 1.0);
  EXPECT_DOUBLE_EQ(*same.at("Spearman"), 1.0);
  const auto rev = tms::regression_metrics(records({1, 2, 3, 4}, {40, 30, 20, 10}));
  EXPECT_DOUBLE_EQ(*rev.at("Spearman"), -1.0);
}

TEST(Regression, HandArithmetic) {
  const auto m = tms::regression_metrics(records({1, 2, 3}, {2, 2, 2}));
  EXPECT_NEAR(*m.at("RMSE"), std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(*m.at("MAE"), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(*m.at("R2"), 0.0, 1e-15);
  EXPECT_FALSE(m.at("Spearman").has_value()) << "constant predictions";
}

TEST(Regression, ZeroVarianceTargets) {
  const auto m = tms::regression_metrics(records({2, 2, 2}, {1, 2, 3}));
  EXPECT_FALSE(m.at("R2").has_value());
  EXPECT_FALSE(m.at("Spearman").has_value());
  EXPECT_THROW(tms::regression_metrics(records({1}, {1})), tms::Error);
}

TEST(Regression, SpearmanAverageRanks) {
  EXPECT_EQ(tms::average_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
  const std::vector<double> x = {1, 2, 2, 3}, y = {1, 3, 2, 4};
  // Pearson correlation of ranks (1, 2.5, 2.5, 4) and (1, 3, 2, 4).
  EXPECT_NEAR(tms::spearman(x, y), 4.5 / std::sqrt(4.5 * 5.0), 1e-15);
}

TEST(Regression, SpearmanInvariantUnderMonotoneMaps) {
  tms::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(40);
    std::vector<double> y(n), p(n), q(n);
    const double a = rng.uniform(0.1, 3.0), b = rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform();
      p[i] = rng.uniform(-1.0, 1.0);
      q[i] = std::exp(a * p[i]) + b * 0.0 + std::atan(p[i]);  // strictly increasing in p
    }
    EXPECT_NEAR(tms::spearman(y, p), tms::spearman(y, q), 1e-12);
  }
}

TEST(Retention, CalibratedFixture) {
  // Half the records are confident and correct, the rest uncertain coin flips.
  std::vector<double> y, p, u;
  for (int i = 0; i < 50; ++i) {
    y.push_back(i % 2);
    p.push_back(i % 2 ? 0.9 : 0.1);
    u.push_back(0.2);
  }
  for (int i = 0; i < 50; ++i) {
    y.push_back(i % 2);
    p.push_back(i % 3 ? 0.7 : 0.3);
    u.push_back(0.8);
  }
  const auto r = records(y, p, u);
  const auto thresholds = tms::default_thresholds();
  const auto curve = tms::retention_curve(r, tms::Task::Classification, "ACC", thresholds);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].first, 1.0);
  EXPECT_EQ(curve[0].second, *tms::classification_metrics(r).at("ACC"));
  EXPECT_EQ(curve[1].first, 0.5);
  EXPECT_GT(curve[1].second, curve[0].second);
}

TEST(Retention, OmitsEmptyAndRepeatedPoints) {
  const auto r = records({1, 0}, {0.9, 0.1}, {0.55, 0.35});
  const auto curve = tms::retention_curve(r, tms::Task::Classification, tms::default_thresholds());
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].threshold, 1.0);
  EXPECT_EQ(curve[1].threshold, 0.5);
  EXPECT_EQ(curve[1].retained, 1u);
  EXPECT_FALSE(curve[1].metrics.at("AUC").has_value());
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LT(curve[i].fraction, curve[i - 1].fraction);
}

TEST(Report, HeadlineMatchesFullRetention) {
  tms::Rng rng(6);
  std::vector<double> y, p, u;
  for (int i = 0; i < 40; ++i) {
    y.push_back(static_cast<double>(rng.below(2)));
    p.push_back(rng.uniform());
    u.push_back(rng.uniform(0.05, 1.0));
  }
  const auto report = tms::RunReport::build(records(y, p, u), tms::Task::Classification, tms::default_thresholds());
  ASSERT_FALSE(report.retention.empty());
  EXPECT_EQ(report.retention[0].fraction, 1.0);
  EXPECT_EQ(report.retention[0].metrics, report.metrics);
  const auto json = tms::report_json(report, R"({"lambda":0.2})", "v-test");
  EXPECT_NE(json.find("\"lambda\": 0.2"), std::string::npos);
  EXPECT_NE(json.find("v-test"), std::string::npos);
  std::ostringstream csv, ret;
  tms::write_predictions_csv(csv, report.per_sample);
  tms::write_retention_csv(ret, report.retention, tms::Task::Classification);
  const std::string lines = csv.str();
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 41);
  EXPECT_EQ(ret.str().substr(0, 34), "threshold,fraction,retained,AUC,AC");
}

TEST(Report, FoldAggregation) {
  std::vector<tms::RunReport> folds(3);
  folds[0].metrics = {{"ACC", 0.8}, {"AUC", std::nullopt}};
  folds[1].metrics = {{"ACC", 0.9}, {"AUC", 0.7}};
  folds[2].metrics = {{"ACC", 1.0}, {"AUC", 0.9}};
  const auto agg = tms::aggregate_folds(folds);
  EXPECT_NEAR(*agg.at("ACC").mean, 0.9, 1e-15);
  EXPECT_NEAR(*agg.at("ACC").stddev, 0.1, 1e-15);
  EXPECT_EQ(agg.at("AUC").defined, 2u);
  EXPECT_NEAR(*agg.at("AUC").mean, 0.8, 1e-15);
}
