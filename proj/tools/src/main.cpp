#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "tms/error.hpp"

namespace {

using namespace tms::cli;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("tms");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("TMS_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept a real match.
    if (level != spdlog::level::off || std::string_view(env) == "off") {
      spdlog::set_level(level);
    } else {
      spdlog::warn("ignoring unknown TMS_LOG level '{}'", env);
    }
  }
}

// Options shared by every subcommand that reads data or builds a model.
struct Common {
  std::string config_path;
  Overrides overrides;
  std::vector<std::string> flags_seen;
};

void add_data_options(CLI::App& cmd, Common& c) {
  auto& o = c.overrides;
  cmd.add_option("--config", c.config_path, "TOML config file; flags override it")->check(CLI::ExistingFile);
  cmd.add_option("--smiles-col", o.smiles_column, "SMILES column name");
  cmd.add_option("--id-col", o.id_column, "Identifier column name (default: row number)");
  cmd.add_option("--threads", o.threads, "Featurization worker threads (0: all cores)");
  cmd.add_option("--batch-size", o.batch_size, "Molecules per batch");
  cmd.add_flag("--largest-component{true}", o.largest_component, "Keep the largest '.'-separated fragment");
}

void add_label_options(CLI::App& cmd, Common& c) {
  cmd.add_option("--label-col", c.overrides.label_column, "Label column name");
}

void add_train_options(CLI::App& cmd, Common& c) {
  auto& o = c.overrides;
  cmd.add_option("--task", o.task, "classification|classify or regression|regress");
  cmd.add_option("--folds", o.folds, "Cross-validation folds; 1 trains a single split");
  cmd.add_option("--test-fraction", o.test_fraction, "Holdout share when --folds 1 (0: evaluate on train)");
  cmd.add_option("--epochs", o.epochs, "Training epochs");
  cmd.add_option("--lr", o.lr, "Adam learning rate");
  cmd.add_option("--lambda", o.lambda, "Contrastive loss weight");
  cmd.add_option("--tau", o.tau, "Contrastive temperature");
  cmd.add_option("--scaling-factor", o.scaling_factor, "Anti-smoothing normalization scale s");
  cmd.add_option("--hidden-dim", o.hidden_dim, "Hidden width d");
  cmd.add_option("--gin-layers", o.gin_layers, "GIN layers K");
  cmd.add_option("--projection-dim", o.projection_dim, "Projection head width");
  cmd.add_option("--patience", o.patience, "Early-stopping patience in epochs");
  cmd.add_option("--validation-fraction", o.validation_fraction, "Share of training data held out for early stopping");
  cmd.add_flag("--early-stopping,!--no-early-stopping", o.early_stopping, "Toggle early stopping");
  cmd.add_flag("--class-weight{true}", o.class_weight, "Inverse-frequency class weights");
  cmd.add_option("--target-scaling", o.target_scaling, "minmax, zscore or none");
  cmd.add_option("--evidence-activation", o.evidence_activation, "softplus, relu or exp");
  cmd.add_option("--seed", o.seed, "Seed for every random choice");
}

void add_eval_options(CLI::App& cmd, Common& c) {
  cmd.add_option("--thresholds", c.overrides.thresholds, "Uncertainty thresholds for the retention curve");
  cmd.add_flag("--fail-on-undefined{true}", c.overrides.fail_on_undefined,
               "Exit 3 when a metric is undefined (e.g. single-class AUC)");
}

CliConfig resolve(const Common& c) {
  CliConfig config = c.config_path.empty() ? CliConfig{} : load_config(c.config_path);
  apply(config, c.overrides);
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Dual-view evidential molecular property models"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Common common;
  TrainArgs train_args;
  PredictArgs predict_args;
  EvalArgs eval_args;
  InspectArgs inspect_args;

  auto* train = app.add_subcommand("train", "Train with k-fold cross-validation or a single split");
  train->add_option("--data", train_args.data, "Labeled CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_args.out_dir, "Output directory")->required();
  add_data_options(*train, common);
  add_label_options(*train, common);
  add_train_options(*train, common);
  add_eval_options(*train, common);

  auto* predict = app.add_subcommand("predict", "Predict with a trained checkpoint");
  predict->add_option("--checkpoint", predict_args.checkpoint, "Checkpoint stem (or its .tms/.json file)")->required();
  auto* input = predict->add_option("--input", predict_args.input, "CSV of molecules")->check(CLI::ExistingFile);
  predict->add_option("--smiles", predict_args.smiles, "SMILES string(s) to score");
  predict->add_option("--output", predict_args.output, "Output file (default stdout)");
  predict->add_option("--format", predict_args.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  add_data_options(*predict, common);
  (void)input;

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on labeled data");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint stem (or its .tms/.json file)")->required();
  eval->add_option("--data", eval_args.data, "Labeled CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_args.out_dir, "Output directory")->required();
  eval->add_flag("--retention", eval_args.retention, "Also write retention.csv");
  add_data_options(*eval, common);
  add_label_options(*eval, common);
  add_eval_options(*eval, common);

  auto* inspect = app.add_subcommand("inspect", "Dump the parsed and remapped graphs of one SMILES as JSON");
  inspect->add_option("smiles", inspect_args.smiles, "SMILES string")->required();
  inspect->add_flag("--largest-component{true}", common.overrides.largest_component,
                    "Keep the largest '.'-separated fragment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const CliConfig config = resolve(common);
    if (train->parsed()) {
      train_args.config = config;
      return cmd_train(train_args);
    }
    if (predict->parsed()) {
      if (!predict_args.input && predict_args.smiles.empty()) {
        spdlog::error("predict needs --input or --smiles");
        return kExitConfig;
      }
      predict_args.config = config;
      return cmd_predict(predict_args);
    }
    if (eval->parsed()) {
      eval_args.config = config;
      return cmd_eval(eval_args);
    }
    inspect_args.config = config;
    return cmd_inspect(inspect_args);
  } catch (const tms::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
}
