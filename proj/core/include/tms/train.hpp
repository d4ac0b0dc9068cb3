#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tms/model.hpp"
#include "tms/smiles.hpp"

namespace tms {

/// Header plus rows of a comma-separated file. Quoted fields may contain
/// commas, doubled quotes and newlines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws MissingColumn.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::string csv_escape(const std::string& field);

struct Record {
  std::string smiles;
  double label = 0.0;
  std::string id;
};

struct Reject {
  std::size_t line = 0;  // 1-based line in the source file, header is line 1
  std::string id;
  std::string smiles;
  std::string reason;
};

struct Schema {
  std::string smiles_col = "smiles";
  std::string label_col = "label";
  /// Empty: ids are the 0-based data row numbers.
  std::string id_col;
  Task task = Task::Classification;
  ParseOptions parse;
  /// When set, rejected rows are written here as CSV.
  std::optional<std::filesystem::path> rejects_path;
};

struct Dataset {
  std::vector<Record> records;
  std::vector<Molecule> molecules;  // parallel to records
  Task task = Task::Classification;
  std::vector<Reject> rejects;

  std::size_t size() const { return records.size(); }
  std::vector<double> labels() const;
};

/// Throws MissingColumn, EmptyDataset, or NonBinaryLabel. Rows whose SMILES
/// fail to parse, whose regression label is not a finite number, or whose id
/// repeats an earlier row are excluded and listed in Dataset::rejects.
Dataset load_dataset(const std::filesystem::path& path, const Schema& schema);
Dataset load_dataset_text(std::string_view csv, const Schema& schema);
void write_rejects(const std::filesystem::path& path, std::span<const Reject> rejects);

/// Builds both graph views for every molecule. Work is split across
/// `threads` workers (0: hardware concurrency); output order matches input.
std::vector<Sample> featurize_all(std::span<const Molecule> molecules, unsigned threads = 0);

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Partitions 0..n-1 into `folds` test sets. With `labels`, each class is
/// dealt separately so every fold gets its share of each class. Throws
/// TooFewSamples unless 2 <= folds <= n.
std::vector<FoldSplit> kfold_split(std::size_t n, int folds, std::uint64_t seed,
                                   std::optional<std::span<const double>> labels = std::nullopt);
std::vector<FoldSplit> kfold_split(const Dataset& dataset, int folds, std::uint64_t seed);

struct TrainConfig {
  double lr = 5e-4;
  std::size_t batch_size = 256;
  int epochs = 100;
  int folds = 10;
  std::uint64_t seed = 42;
  ObjectiveConfig objective;
  EncoderConfig encoder;
  EvidenceActivation evidence = EvidenceActivation::Softplus;
  RegressionBound regression_bound = RegressionBound::Sigmoid;
  std::string target_scaling = "minmax";
  bool early_stopping = true;
  int patience = 15;
  double validation_fraction = 0.1;
  /// Inverse class-frequency weights on the per-sample task losses.
  bool class_weight = false;
  unsigned threads = 0;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  LossBreakdown train;
  /// Combined total loss on the validation carve-out, when there is one.
  std::optional<double> val_metric;
  /// Mean over steps of the global L2 gradient norm.
  double grad_norm = 0.0;
  std::size_t steps = 0;
};

std::string to_json_line(const EpochLog& log);

struct TrainResult {
  std::unique_ptr<DualViewModel> model;
  std::vector<EpochLog> history;
  /// Epoch whose weights were kept (the last one without early stopping).
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains a fresh model on `samples` with raw `labels` (regression targets
/// are scaled inside). Deterministic for a fixed config. Throws
/// NonFiniteLoss naming the first non-finite loss term.
TrainResult train_fold(std::span<const Sample* const> samples, std::span<const double> labels, Task task,
                       const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Fused predictions in batches; regression means are mapped back to the
/// original target scale.
std::vector<Prediction> predict_samples(DualViewModel& model, std::span<const Sample* const> samples,
                                        std::size_t batch_size = 256);

}  // namespace tms
