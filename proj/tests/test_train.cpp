#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "tms/error.hpp"
#include "tms/train.hpp"

namespace fs = std::filesystem;

namespace {

tms::Errc load_error(const std::string& csv, const tms::Schema& schema) {
  try {
    tms::load_dataset_text(csv, schema);
  } catch (const tms::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return tms::Errc::ConfigError;
}

struct Toy {
  tms::Dataset data;
  std::vector<tms::Sample> samples;
  std::vector<const tms::Sample*> ptrs;
};

Toy toy() {
  tms::Schema schema;
  schema.id_col = "id";
  Toy t{tms::load_dataset(std::string(TMS_FIXTURE_DIR) + "/toy_classification.csv", schema), {}, {}};
  t.samples = tms::featurize_all(t.data.molecules, 2);
  for (const auto& s : t.samples) t.ptrs.push_back(&s);
  return t;
}

tms::TrainConfig quick_config() {
  tms::TrainConfig c;
  c.epochs = 5;
  c.batch_size = 8;
  c.encoder.hidden_dim = 16;
  c.encoder.projection_dim = 8;
  c.early_stopping = false;
  return c;
}

}  // namespace

TEST(Csv, QuotedFields) {
  const auto t = tms::parse_csv("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n\"multi\nline\",2\r\n\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x,1");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.rows[1][0], "multi\nline");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_THROW(t.column("c"), tms::Error);
  EXPECT_THROW(tms::parse_csv("a\n\"open"), tms::Error);
  EXPECT_EQ(tms::csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(tms::csv_escape("plain"), "plain");
}

TEST(LoadDataset, ThreeRows) {
  const auto ds = tms::load_dataset_text("smiles,label\nCCO,1\nC,0\nc1ccccc1,1\n", {});
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.records[2].id, "2");
  EXPECT_EQ(ds.labels(), (std::vector<double>{1, 0, 1}));
}

TEST(LoadDataset, RejectsAreLoggedAndExcluded) {
  tms::Schema schema;
  schema.rejects_path = fs::temp_directory_path() / "tms_rejects.csv";
  const auto ds = tms::load_dataset_text("smiles,label\nCCO,1\nC1CC,0\nCC.O,1\nc1ccccc1,0\n", schema);
  EXPECT_EQ(ds.size(), 2u);
  ASSERT_EQ(ds.rejects.size(), 2u);
  EXPECT_EQ(ds.rejects[0].line, 3u);
  EXPECT_NE(ds.rejects[0].reason.find("DanglingRingClosure"), std::string::npos);
  const auto logged = tms::read_csv(*schema.rejects_path);
  EXPECT_EQ(logged.rows.size(), 2u);
}

TEST(LoadDataset, Errors) {
  tms::Schema schema;
  EXPECT_EQ(load_error("smiles,y\nCCO,1\n", schema), tms::Errc::MissingColumn);
  EXPECT_EQ(load_error("smiles,label\n", schema), tms::Errc::EmptyDataset);
  EXPECT_EQ(load_error("smiles,label\nC1CC,1\n", schema), tms::Errc::EmptyDataset);
  EXPECT_EQ(load_error("smiles,label\nCCO,2\n", schema), tms::Errc::NonBinaryLabel);
  EXPECT_EQ(load_error("smiles,label\nCCO,yes\n", schema), tms::Errc::NonBinaryLabel);
}

TEST(LoadDataset, RegressionAndDuplicateIds) {
  tms::Schema schema;
  schema.task = tms::Task::Regression;
  schema.id_col = "id";
  schema.label_col = "t_half";
  const auto ds = tms::load_dataset_text("id,smiles,t_half\na,CCO,3.5\nb,CC,nan\na,C,1\nc,CCC,-2e1\n", schema);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.records[1].label, -20.0);
  EXPECT_EQ(ds.rejects.size(), 2u);
}

TEST(KFold, PartitionAndSizes) {
  const auto folds = tms::kfold_split(10, 5, 1);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<int> seen(10, 0);
  for (const auto& f : folds) {
    EXPECT_EQ(f.test.size(), 2u);
    EXPECT_EQ(f.train.size(), 8u);
    for (auto i : f.test) ++seen[i];
    for (auto i : f.test) EXPECT_EQ(std::count(f.train.begin(), f.train.end(), i), 0);
  }
  EXPECT_EQ(seen, std::vector<int>(10, 1));
}

TEST(KFold, Stratified) {
  const std::vector<double> labels = {1, 1, 1, 1, 0, 1, 1, 1, 0, 1};
  const auto folds = tms::kfold_split(10, 2, 3, std::span<const double>(labels));
  for (const auto& f : folds) {
    int neg = 0;
    for (auto i : f.test) neg += labels[i] == 0;
    EXPECT_EQ(neg, 1);
    EXPECT_EQ(f.test.size(), 5u);
  }
}

TEST(KFold, DeterministicAndSeedSensitive) {
  const auto a = tms::kfold_split(50, 5, 9), b = tms::kfold_split(50, 5, 9), c = tms::kfold_split(50, 5, 10);
  for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(a[f].test, b[f].test);
  bool differs = false;
  for (std::size_t f = 0; f < 5; ++f) differs |= a[f].test != c[f].test;
  EXPECT_TRUE(differs);
}

TEST(KFold, TooFewSamples) {
  EXPECT_THROW(tms::kfold_split(3, 4, 0), tms::Error);
  EXPECT_THROW(tms::kfold_split(3, 1, 0), tms::Error);
}

TEST(Featurize, ParallelMatchesSerial) {
  const auto t = toy();
  const auto serial = tms::featurize_all(t.data.molecules, 1);
  const auto parallel = tms::featurize_all(t.data.molecules, 4);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].mol.node_features, parallel[i].mol.node_features);
    EXPECT_EQ(serial[i].bond.node_inputs, parallel[i].bond.node_inputs);
  }
}

TEST(TrainFold, DeterministicHistory) {
  const auto t = toy();
  const auto labels = t.data.labels();
  const auto a = tms::train_fold(t.ptrs, labels, tms::Task::Classification, quick_config());
  const auto b = tms::train_fold(t.ptrs, labels, tms::Task::Classification, quick_config());
  ASSERT_EQ(a.history.size(), 5u);
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].train.total, b.history[e].train.total);
    EXPECT_EQ(a.history[e].train.loss_CL, b.history[e].train.loss_CL);
    EXPECT_EQ(a.history[e].grad_norm, b.history[e].grad_norm);
  }
}

TEST(TrainFold, BreakdownRecombines) {
  const auto t = toy();
  auto cfg = quick_config();
  for (double lambda : {0.0, 0.2}) {
    cfg.objective.lambda = lambda;
    const auto r = tms::train_fold(t.ptrs, t.data.labels(), tms::Task::Classification, cfg);
    for (const auto& e : r.history) {
      const auto& b = e.train;
      EXPECT_NEAR(b.total, b.loss_G + b.loss_Gr + lambda * b.loss_CL, 1e-9);
      EXPECT_GT(b.loss_CL, 0.0);
      EXPECT_TRUE(std::isfinite(e.grad_norm));
      EXPECT_GT(e.grad_norm, 0.0);
    }
  }
}

TEST(TrainFold, EarlyStoppingUsesValidationCarveOut) {
  const auto t = toy();
  auto cfg = quick_config();
  cfg.early_stopping = true;
  cfg.validation_fraction = 0.2;
  cfg.patience = 2;
  cfg.epochs = 30;
  const auto r = tms::train_fold(t.ptrs, t.data.labels(), tms::Task::Classification, cfg);
  for (const auto& e : r.history) ASSERT_TRUE(e.val_metric.has_value());
  EXPECT_GE(r.best_epoch, 1);
  EXPECT_LE(r.best_epoch, static_cast<int>(r.history.size()));
  if (static_cast<int>(r.history.size()) < cfg.epochs) {
    EXPECT_EQ(static_cast<int>(r.history.size()), r.best_epoch + cfg.patience);
  }
}

TEST(TrainFold, RegressionPredictionsAreDenormalized) {
  tms::Schema schema;
  schema.task = tms::Task::Regression;
  schema.label_col = "value";
  const auto ds = tms::load_dataset(std::string(TMS_FIXTURE_DIR) + "/toy_regression.csv", schema);
  const auto samples = tms::featurize_all(ds.molecules);
  std::vector<const tms::Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const auto r = tms::train_fold(ptrs, ds.labels(), tms::Task::Regression, quick_config());
  const auto& scaling = r.model->config().scaling;
  EXPECT_EQ(scaling.min, 0.1);
  EXPECT_EQ(scaling.max, 4.0);
  for (const auto& p : tms::predict_samples(*r.model, ptrs)) {
    EXPECT_GE(p.y_pred, scaling.from_unit(0.0) - 1e-9);
    EXPECT_LE(p.y_pred, scaling.from_unit(1.0) + 1e-9);
  }
}

TEST(TrainFold, NonFiniteLossNamesTheTerm) {
  const auto t = toy();
  auto cfg = quick_config();
  cfg.lr = 1e300;  // first step blows the weights up
  cfg.epochs = 3;
  try {
    tms::train_fold(t.ptrs, t.data.labels(), tms::Task::Classification, cfg);
    FAIL() << "expected NonFiniteLoss";
  } catch (const tms::Error& e) {
    EXPECT_EQ(e.code(), tms::Errc::NonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("loss_"), std::string::npos) << e.what();
  }
}

TEST(TrainConfig, Validation) {
  tms::TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), tms::Error);
  c = {};
  c.validation_fraction = 1.0;
  EXPECT_THROW(c.validate(), tms::Error);
  EXPECT_NO_THROW(tms::TrainConfig{}.validate());
}

TEST(EpochLog, JsonLine) {
  tms::EpochLog log;
  log.epoch = 3;
  log.train = tms::combined_loss(1, 2, 3, 0.5);
  const auto line = tms::to_json_line(log);
  for (const char* key : {"\"epoch\":3", "\"loss_G\"", "\"loss_Gr\"", "\"loss_CL\"", "\"total\":4.5", "\"val_metric\":null"}) {
    EXPECT_NE(line.find(key), std::string::npos) << key;
  }
}
