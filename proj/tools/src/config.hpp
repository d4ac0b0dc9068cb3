#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tms/evaluate.hpp"
#include "tms/train.hpp"

namespace tms::cli {

/// Value of one key in the TOML subset the config file uses: booleans,
/// numbers, basic strings, and flat arrays of numbers.
using TomlValue = std::variant<bool, double, std::string, std::vector<double>>;
/// section -> key -> value; keys before any header land in section "".
using TomlDocument = std::map<std::string, std::map<std::string, TomlValue>>;

/// Throws ConfigError naming the offending line.
TomlDocument parse_toml(std::string_view text);

/// Everything a command can be configured with. Sections of the config file
/// follow the library modules: [smiles], [featurize], [encoder],
/// [objectives], [train], [evaluate].
struct CliConfig {
  // [train] data columns and task
  std::string task = "classification";
  std::string smiles_column = "smiles";
  std::string label_column = "label";
  std::string id_column;
  double test_fraction = 0.2;  // holdout share when folds = 1

  // [smiles]
  bool largest_component = false;

  // [encoder], [objectives] and the rest of [train]
  TrainConfig train;

  // [evaluate]
  std::vector<double> thresholds = default_thresholds();
  bool fail_on_undefined = false;

  Task task_kind() const { return task_from_string(task); }
  ParseOptions parse_options() const { return ParseOptions{largest_component}; }
  Schema schema() const;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// Applies every key in `doc`; unknown sections or keys and mistyped values
/// throw ConfigError.
void apply_document(CliConfig& config, const TomlDocument& doc);
CliConfig load_config(const std::filesystem::path& path);

/// Resolved config as JSON text, grouped by section like the file.
std::string to_json(const CliConfig& config);

/// Values given on the command line; set fields override the file.
struct Overrides {
  std::optional<std::string> task, smiles_column, label_column, id_column, target_scaling, evidence_activation;
  std::optional<double> lr, lambda, tau, scaling_factor, validation_fraction, test_fraction;
  std::optional<int> epochs, folds, patience, hidden_dim, gin_layers, projection_dim;
  std::optional<std::size_t> batch_size;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<bool> early_stopping, class_weight, largest_component, fail_on_undefined;
  std::optional<std::vector<double>> thresholds;
};

void apply(CliConfig& config, const Overrides& overrides);

/// Project version plus `git describe` of the source tree at build time.
std::string_view version();

}  // namespace tms::cli
