#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tms/encoder.hpp"
#include "tms/objectives.hpp"

namespace tms {

enum class Task { Classification, Regression };

std::string to_string(Task task);
Task task_from_string(const std::string& text);

/// Maps regression targets into (0, 1) and back.
///
/// "minmax" maps [min, max] of the training targets onto [low, high];
/// "zscore" standardizes and then applies the logistic function.
struct TargetScaling {
  std::string kind = "minmax";
  double min = 0.0;
  double max = 1.0;
  double mean = 0.0;
  double stddev = 1.0;
  double low = 0.01;
  double high = 0.99;

  static TargetScaling fit(std::span<const double> targets, const std::string& kind = "minmax");
  double to_unit(double y) const;
  double from_unit(double u) const;
};

struct ModelConfig {
  Task task = Task::Classification;
  EncoderConfig encoder;
  EvidenceActivation evidence = EvidenceActivation::Softplus;
  RegressionBound regression_bound = RegressionBound::Sigmoid;
  TargetScaling scaling;
  std::uint64_t seed = 42;
};

/// Featurized molecule in both views.
struct Sample {
  MolGraph mol;
  BondGraph bond;
};

Sample prepare_sample(const Molecule& mol);

struct Batch {
  GraphBatch mol;
  GraphBatch bond;
  /// 1 when the molecule has at least one bond, else 0.
  std::vector<double> bond_present;

  std::size_t size() const { return mol.num_graphs; }
};

Batch make_batch(std::span<const Sample* const> samples);

struct ModelOutput {
  EncodedView mol;
  EncodedView bond;
  BetaParams mol_head;
  BetaParams bond_head;
};

struct ObjectiveConfig {
  double lambda = 0.2;
  double tau = 0.5;
  bool symmetric_contrastive = false;
};

struct LossTerms {
  Var loss_G;
  Var loss_Gr;
  Var loss_CL;
  Var total;

  LossBreakdown values(double lambda) const;
};

/// One fused prediction in the task's unit space (regression means are
/// still in (0, 1); callers apply TargetScaling::from_unit).
struct Prediction {
  double y_pred = 0.0;
  double uncertainty = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
};

/// Two GIN view encoders, each with its own evidential head.
class DualViewModel {
 public:
  explicit DualViewModel(const ModelConfig& config);

  ModelOutput forward(Tape& tape, const Batch& batch);
  /// `weights`, when non-empty, scales each sample's task losses.
  LossTerms loss(Tape& tape, const ModelOutput& out, const Batch& batch, std::span<const double> targets,
                 const ObjectiveConfig& objective, std::span<const double> weights = {}) const;
  std::vector<Prediction> predict(const Batch& batch);

  /// Parameters in a fixed order; names are unique.
  std::vector<Parameter*> parameters();
  const ModelConfig& config() const { return config_; }

  /// Writes `<stem>.tms` (weights) and `<stem>.json` (config sidecar).
  void save(const std::filesystem::path& stem, const std::string& extra_json = "{}");
  /// Throws ConfigError when the sidecar and weights disagree.
  static DualViewModel load(const std::filesystem::path& stem);

 private:
  BetaParams head(Tape& tape, Linear& layer, Var p) const;

  ModelConfig config_;
  Rng rng_;
  std::unique_ptr<ViewEncoder> mol_;
  std::unique_ptr<ViewEncoder> bond_;
  std::unique_ptr<Linear> mol_head_;
  std::unique_ptr<Linear> bond_head_;
};

std::string model_config_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace tms
