#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tms/error.hpp"
#include "tms/remap.hpp"

namespace tms::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
      return kExitConfig;
    case Errc::MissingColumn:
    case Errc::EmptyDataset:
    case Errc::NonBinaryLabel:
    case Errc::TooFewSamples:
    case Errc::FormatError:
    case Errc::SingleClassAUC:
    case Errc::UnsupportedToken:
    case Errc::DanglingRingClosure:
    case Errc::UnbalancedBranch:
    case Errc::ValenceViolation:
    case Errc::DisconnectedInput:
    case Errc::EmptyMolecule:
      return kExitData;
    case Errc::NonFiniteLoss:
      return kExitNonFinite;
    default:
      return kExitFailure;
  }
}

fs::path checkpoint_stem(fs::path path) {
  if (path.extension() == ".tms" || path.extension() == ".json") path.replace_extension();
  return path;
}

namespace {

// Provenance line heading every CSV artifact.
std::string csv_preamble(const std::string& config_json) {
  return "# tms " + std::string(version()) + " config=" + config_json + "\n";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::FormatError, "cannot write " + path.string());
  return os;
}

std::vector<const Sample*> pick(const std::vector<Sample>& samples, std::span<const std::size_t> idx) {
  std::vector<const Sample*> out;
  for (std::size_t i : idx) out.push_back(&samples[i]);
  return out;
}

std::vector<PredictionRecord> to_records(const Dataset& data, std::span<const std::size_t> idx,
                                         const std::vector<Prediction>& preds) {
  std::vector<PredictionRecord> out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& r = data.records[idx[k]];
    const auto& p = preds[k];
    out.push_back({r.id, r.label, p.y_pred, p.uncertainty, p.alpha, p.beta});
  }
  return out;
}

void log_metrics(const std::string& what, const Metrics& m) {
  std::string line;
  for (const auto& [name, v] : m) {
    line += " " + name + "=" + (v ? std::to_string(*v) : std::string("undefined"));
  }
  spdlog::info("{}:{}", what, line);
}

bool any_undefined(const Metrics& m) {
  return std::any_of(m.begin(), m.end(), [](const auto& kv) { return !kv.second.has_value(); });
}

// Writes report.json, predictions.csv and retention.csv for one evaluated split.
RunReport write_split_outputs(const fs::path& dir, std::vector<PredictionRecord> records, Task task,
                              const CliConfig& config, const std::string& config_json, const json& extra) {
  RunReport report = RunReport::build(std::move(records), task, config.thresholds);
  json j = json::parse(report_json(report, config_json, std::string(version())));
  for (const auto& [k, v] : extra.items()) j[k] = v;
  open_out(dir / "report.json") << j.dump(2) << '\n';
  {
    auto os = open_out(dir / "predictions.csv");
    os << csv_preamble(config_json);
    write_predictions_csv(os, report.per_sample);
  }
  {
    auto os = open_out(dir / "retention.csv");
    os << csv_preamble(config_json);
    write_retention_csv(os, report.retention, task);
  }
  return report;
}

struct FoldOutcome {
  RunReport report;
  int best_epoch = 0;
};

FoldOutcome run_split(const fs::path& dir, const Dataset& data, const std::vector<Sample>& samples,
                      std::span<const std::size_t> train_idx, std::span<const std::size_t> eval_idx,
                      const CliConfig& config, const std::string& config_json, json extra) {
  fs::create_directories(dir);
  const auto train_ptrs = pick(samples, train_idx);
  std::vector<double> labels;
  for (std::size_t i : train_idx) labels.push_back(data.records[i].label);

  auto log = open_out(dir / "train_log.jsonl");
  log << json{{"config", json::parse(config_json)}, {"version", version()}}.dump() << '\n';
  const auto result = train_fold(train_ptrs, labels, data.task, config.train, [&](const EpochLog& e) {
    log << to_json_line(e) << '\n';
    log.flush();
    spdlog::debug("epoch {} total {:.6f} val {}", e.epoch, e.train.total,
                  e.val_metric ? std::to_string(*e.val_metric) : "-");
  });
  extra["best_epoch"] = result.best_epoch;

  json meta{{"config", json::parse(config_json)}, {"version", version()}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  result.model->save(dir / "model", meta.dump());

  const auto eval_ptrs = pick(samples, eval_idx);
  const auto preds = predict_samples(*result.model, eval_ptrs, config.train.batch_size);
  FoldOutcome out;
  out.report = write_split_outputs(dir, to_records(data, eval_idx, preds), data.task, config, config_json, extra);
  out.best_epoch = result.best_epoch;
  return out;
}

Dataset load(const fs::path& path, const CliConfig& config, const std::optional<fs::path>& rejects) {
  Schema schema = config.schema();
  schema.rejects_path = rejects;
  Dataset data = load_dataset(path, schema);
  for (const auto& r : data.rejects) spdlog::warn("line {} ({}) rejected: {}", r.line, r.id, r.reason);
  spdlog::info("loaded {} molecules from {} ({} rejected)", data.size(), path.string(), data.rejects.size());
  return data;
}

}  // namespace

int cmd_train(const TrainArgs& args) {
  const CliConfig& config = args.config;
  const std::string config_json = to_json(config);
  fs::create_directories(args.out_dir);
  open_out(args.out_dir / "config.json") << json{{"config", json::parse(config_json)}, {"version", version()}}.dump(2)
                                         << '\n';
  const Dataset data = load(args.data, config, args.out_dir / "rejects.csv");
  const auto samples = featurize_all(data.molecules, config.train.threads);

  if (config.train.folds >= 2) {
    const auto splits = kfold_split(data, config.train.folds, config.train.seed);
    std::vector<RunReport> reports;
    for (std::size_t k = 0; k < splits.size(); ++k) {
      spdlog::info("fold {}/{}: {} train, {} test", k + 1, splits.size(), splits[k].train.size(),
                   splits[k].test.size());
      auto outcome = run_split(args.out_dir / ("fold_" + std::to_string(k)), data, samples, splits[k].train,
                               splits[k].test, config, config_json, json{{"fold", k}, {"evaluated_on", "test"}});
      log_metrics("fold " + std::to_string(k + 1), outcome.report.metrics);
      reports.push_back(std::move(outcome.report));
    }
    open_out(args.out_dir / "report.json") << aggregate_json(reports, config_json, std::string(version())) << '\n';
    for (const auto& [name, s] : aggregate_folds(reports)) {
      if (s.mean) spdlog::info("{} = {:.4f} +/- {:.4f} over {} folds", name, *s.mean, s.stddev.value_or(0.0), s.defined);
    }
    return kExitOk;
  }

  // Single split: a shuffled holdout, or the training set itself when
  // test_fraction is 0.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.train.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_test = static_cast<std::size_t>(std::round(config.test_fraction * static_cast<double>(data.size())));
  if (n_test >= data.size()) throw Error(Errc::TooFewSamples, "holdout would leave no training data");
  const std::span<const std::size_t> all(order);
  const auto test = n_test > 0 ? all.first(n_test) : all;
  const auto train = all.subspan(n_test);
  spdlog::info("single split: {} train, {} evaluated", train.size(), test.size());
  const auto outcome = run_split(args.out_dir, data, samples, train, test, config, config_json,
                                 json{{"evaluated_on", n_test > 0 ? "holdout" : "train"}});
  log_metrics("evaluation", outcome.report.metrics);
  return kExitOk;
}

int cmd_predict(const PredictArgs& args) {
  const CliConfig& config = args.config;
  DualViewModel model = DualViewModel::load(checkpoint_stem(args.checkpoint));

  struct Row {
    std::string id, smiles, error;
    std::optional<Sample> sample;
  };
  std::vector<Row> rows;
  if (args.input) {
    const CsvTable table = read_csv(*args.input);
    const std::size_t smiles_col = table.column(config.smiles_column);
    const std::optional<std::size_t> id_col =
        config.id_column.empty() ? std::nullopt : std::optional(table.column(config.id_column));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& r = table.rows[i];
      rows.push_back({id_col ? r[*id_col] : std::to_string(i), r[smiles_col], {}, {}});
    }
  }
  for (const auto& s : args.smiles) rows.push_back({std::to_string(rows.size()), s, {}, {}});
  if (rows.empty()) throw Error(Errc::EmptyDataset, "no SMILES given");

  std::vector<const Sample*> ok;
  for (auto& row : rows) {
    try {
      row.sample = prepare_sample(parse_smiles(row.smiles, config.parse_options()));
    } catch (const Error& e) {
      row.error = e.what();
      spdlog::warn("{}: {}", row.id, row.error);
    }
  }
  for (const auto& row : rows) {
    if (row.sample) ok.push_back(&*row.sample);
  }
  const auto preds = predict_samples(model, ok, config.train.batch_size);

  const auto& mc = model.config();
  std::ofstream file;
  if (args.output) file = open_out(*args.output);
  std::ostream& os = args.output ? file : std::cout;
  os.precision(17);
  const json provenance{{"checkpoint", checkpoint_stem(args.checkpoint).string()},
                        {"task", to_string(mc.task)},
                        {"version", version()},
                        {"config", json::parse(to_json(config))}};
  if (args.format == "json") {
    json out = provenance;
    out["predictions"] = json::array();
    std::size_t k = 0;
    for (const auto& row : rows) {
      json j{{"id", row.id}, {"smiles", row.smiles}};
      if (row.sample) {
        const auto& p = preds[k++];
        j.update({{"y_pred", p.y_pred}, {"uncertainty", p.uncertainty}, {"alpha", p.alpha}, {"beta", p.beta}});
      } else {
        j["error"] = row.error;
      }
      out["predictions"].push_back(std::move(j));
    }
    os << out.dump(2) << '\n';
  } else {
    os << "# tms " << version() << " config=" << provenance.dump() << '\n';
    os << "id,smiles,y_pred,uncertainty,alpha,beta,error\n";
    std::size_t k = 0;
    for (const auto& row : rows) {
      os << csv_escape(row.id) << ',' << csv_escape(row.smiles) << ',';
      if (row.sample) {
        const auto& p = preds[k++];
        os << p.y_pred << ',' << p.uncertainty << ',' << p.alpha << ',' << p.beta << ",\n";
      } else {
        os << ",,,," << csv_escape(row.error) << '\n';
      }
    }
  }
  return kExitOk;
}

int cmd_eval(const EvalArgs& args) {
  DualViewModel model = DualViewModel::load(checkpoint_stem(args.checkpoint));
  CliConfig config = args.config;
  config.task = to_string(model.config().task);
  const std::string config_json = to_json(config);
  fs::create_directories(args.out_dir);
  const Dataset data = load(args.data, config, args.out_dir / "rejects.csv");
  const auto samples = featurize_all(data.molecules, config.train.threads);
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto preds = predict_samples(model, pick(samples, idx), config.train.batch_size);
  const RunReport report =
      write_split_outputs(args.out_dir, to_records(data, idx, preds), data.task, config, config_json,
                          json{{"checkpoint", checkpoint_stem(args.checkpoint).string()}, {"evaluated_on", "data"}});
  if (!args.retention) fs::remove(args.out_dir / "retention.csv");
  log_metrics("evaluation", report.metrics);

  json summary = json::object();
  for (const auto& [k, v] : report.metrics) summary[k] = v ? json(*v) : json();
  std::cout << summary.dump() << '\n';
  if (any_undefined(report.metrics)) {
    spdlog::warn("some metrics are undefined on this data (e.g. AUC with a single class)");
    if (config.fail_on_undefined) return kExitData;
  }
  return kExitOk;
}

int cmd_inspect(const InspectArgs& args) {
  const Molecule mol = parse_smiles(args.smiles, args.config.parse_options());
  const MolGraph g = build_graph(mol);
  const BondGraph r = remap_topology(g);
  auto rows_of = [](const Matrix& m) {
    json out = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) out.push_back(std::vector<double>(m.row_span(i).begin(), m.row_span(i).end()));
    return out;
  };
  json atoms = json::array();
  for (std::size_t i = 0; i < mol.num_atoms(); ++i) {
    const auto& a = mol.atoms[i];
    atoms.push_back({{"index", i},
                     {"element", element_symbol(a.element)},
                     {"charge", a.formal_charge},
                     {"hydrogens", a.hydrogens},
                     {"aromatic", a.aromatic},
                     {"in_ring", static_cast<bool>(mol.atom_in_ring[i])}});
  }
  static constexpr const char* kOrderNames[] = {"single", "double", "triple", "aromatic"};
  json bonds = json::array();
  for (std::size_t b = 0; b < mol.num_bonds(); ++b) {
    const auto& bd = mol.bonds[b];
    bonds.push_back({{"index", b},
                     {"atoms", {bd.begin, bd.end}},
                     {"order", kOrderNames[static_cast<int>(bd.order)]},
                     {"in_ring", static_cast<bool>(mol.bond_in_ring[b])}});
  }
  const json out{
      {"version", version()},
      {"smiles", args.smiles},
      {"canonical_smiles", write_smiles(mol)},
      {"warnings", mol.warnings},
      {"atoms", atoms},
      {"bonds", bonds},
      {"molecular_graph",
       {{"num_nodes", g.num_nodes()},
        {"num_edges", g.num_edges()},
        {"edges", g.edges},
        {"node_features", rows_of(g.node_features)},
        {"edge_features", rows_of(g.edge_features)}}},
      {"bond_graph",
       {{"num_nodes", r.num_nodes()},
        {"num_edges", r.num_edges()},
        {"node_origin", r.node_origin},
        {"edges", r.edges},
        {"edge_mediator", r.edge_mediator},
        {"node_inputs", rows_of(r.node_inputs)},
        {"edge_inputs", rows_of(r.edge_inputs)}}},
  };
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace tms::cli
