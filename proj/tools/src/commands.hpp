#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "tms/error.hpp"

namespace tms::cli {

// Documented process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNonFinite = 4;

/// Maps a library error to the exit code its category is documented under.
int exit_code_for(tms::Errc code);

struct TrainArgs {
  std::filesystem::path data;
  std::filesystem::path out_dir;
  CliConfig config;
};

struct PredictArgs {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> input;
  std::vector<std::string> smiles;
  std::optional<std::filesystem::path> output;
  std::string format = "csv";
  CliConfig config;
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::filesystem::path out_dir;
  bool retention = false;
  CliConfig config;
};

struct InspectArgs {
  std::string smiles;
  CliConfig config;
};

int cmd_train(const TrainArgs& args);
int cmd_predict(const PredictArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_inspect(const InspectArgs& args);

/// Accepts a checkpoint stem or either of its two files.
std::filesystem::path checkpoint_stem(std::filesystem::path path);

}  // namespace tms::cli
