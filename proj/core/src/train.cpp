#include "tms/train.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tms/error.hpp"
#include "tms/rng.hpp"

namespace tms {

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(Errc::MissingColumn, "no column named '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

// Returns rows with the 1-based line on which each starts.
std::vector<std::pair<std::size_t, std::vector<std::string>>> split_csv(std::string_view text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, row_line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.size() == 1 && row[0].empty();
    if (!blank) rows.emplace_back(row_line, std::move(row));
    row.clear();
  };
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw Error(Errc::FormatError, "stray quote on line " + std::to_string(line));
        quoted = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r': break;
      case '\n':
        end_row();
        row_line = ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw Error(Errc::FormatError, "unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::FormatError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  auto rows = split_csv(text);
  CsvTable t;
  if (rows.empty()) return t;
  t.header = std::move(rows.front().second);
  for (auto& h : t.header) h = trim(h);
  for (std::size_t i = 1; i < rows.size(); ++i) t.rows.push_back(std::move(rows[i].second));
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(slurp(path)); }

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<double> Dataset::labels() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

Dataset load_dataset_text(std::string_view csv, const Schema& schema) {
  const auto rows = split_csv(csv);
  if (rows.empty()) throw Error(Errc::EmptyDataset, "no header row");
  CsvTable header_only;
  header_only.header = rows.front().second;
  for (auto& h : header_only.header) h = trim(h);
  const std::size_t smiles_col = header_only.column(schema.smiles_col);
  const std::size_t label_col = header_only.column(schema.label_col);
  const std::optional<std::size_t> id_col =
      schema.id_col.empty() ? std::nullopt : std::optional(header_only.column(schema.id_col));

  Dataset ds;
  ds.task = schema.task;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, fields] = rows[r];
    auto field = [&](std::size_t col) { return col < fields.size() ? trim(fields[col]) : std::string(); };
    Record rec;
    rec.smiles = field(smiles_col);
    rec.id = id_col ? field(*id_col) : std::to_string(r - 1);
    auto reject = [&](const std::string& reason) { ds.rejects.push_back({line, rec.id, rec.smiles, reason}); };

    const std::string label_text = field(label_col);
    const auto label = parse_number(label_text);
    if (schema.task == Task::Classification) {
      if (!label || (*label != 0.0 && *label != 1.0)) {
        throw Error(Errc::NonBinaryLabel,
                    "line " + std::to_string(line) + ": label '" + label_text + "' is not 0 or 1");
      }
    } else if (!label || !std::isfinite(*label)) {
      reject("label '" + label_text + "' is not a finite number");
      continue;
    }
    rec.label = *label;
    if (!seen.insert(rec.id).second) {
      reject("duplicate id");
      continue;
    }
    try {
      ds.molecules.push_back(parse_smiles(rec.smiles, schema.parse));
    } catch (const Error& e) {
      reject(e.what());
      continue;
    }
    ds.records.push_back(std::move(rec));
  }
  if (schema.rejects_path) write_rejects(*schema.rejects_path, ds.rejects);
  if (ds.records.empty()) {
    throw Error(Errc::EmptyDataset, "no usable rows (" + std::to_string(ds.rejects.size()) + " rejected)");
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema) {
  return load_dataset_text(slurp(path), schema);
}

void write_rejects(const std::filesystem::path& path, std::span<const Reject> rejects) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::FormatError, "cannot write " + path.string());
  os << "line,id,smiles,reason\n";
  for (const auto& r : rejects) {
    os << r.line << ',' << csv_escape(r.id) << ',' << csv_escape(r.smiles) << ',' << csv_escape(r.reason) << '\n';
  }
}

std::vector<Sample> featurize_all(std::span<const Molecule> molecules, unsigned threads) {
  std::vector<Sample> out(molecules.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, molecules.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(molecules.size());
  auto work = [&] {
    for (std::size_t i = next++; i < molecules.size(); i = next++) {
      try {
        out[i] = prepare_sample(molecules[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<FoldSplit> kfold_split(std::size_t n, int folds, std::uint64_t seed,
                                   std::optional<std::span<const double>> labels) {
  if (folds < 2 || static_cast<std::size_t>(folds) > n) {
    throw Error(Errc::TooFewSamples,
                std::to_string(folds) + " folds requested for " + std::to_string(n) + " samples");
  }
  if (labels && labels->size() != n) throw Error(Errc::BatchMismatch, "label count differs from sample count");

  std::vector<std::vector<std::size_t>> groups;
  if (labels) {
    std::vector<std::size_t> neg, pos;
    for (std::size_t i = 0; i < n; ++i) ((*labels)[i] > 0.5 ? pos : neg).push_back(i);
    groups = {std::move(neg), std::move(pos)};
  } else {
    groups.emplace_back(n);
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }

  Rng rng(seed);
  std::vector<int> fold_of(n);
  // Dealing continues round-robin across groups so fold sizes differ by at
  // most one overall as well as within each class.
  std::size_t dealt = 0;
  for (auto& g : groups) {
    rng.shuffle(std::span<std::size_t>(g));
    for (std::size_t idx : g) fold_of[idx] = static_cast<int>(dealt++ % static_cast<std::size_t>(folds));
  }
  std::vector<FoldSplit> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < n; ++i) {
    for (int f = 0; f < folds; ++f) (f == fold_of[i] ? out[f].test : out[f].train).push_back(i);
  }
  return out;
}

std::vector<FoldSplit> kfold_split(const Dataset& dataset, int folds, std::uint64_t seed) {
  const auto labels = dataset.labels();
  if (dataset.task == Task::Classification) return kfold_split(dataset.size(), folds, seed, std::span(labels));
  return kfold_split(dataset.size(), folds, seed);
}

void TrainConfig::validate() const {
  encoder.validate();
  if (!(lr > 0.0)) throw Error(Errc::ConfigError, "lr must be > 0");
  if (batch_size < 1) throw Error(Errc::ConfigError, "batch_size must be >= 1");
  if (epochs < 1) throw Error(Errc::ConfigError, "epochs must be >= 1");
  if (folds < 1) throw Error(Errc::ConfigError, "folds must be >= 1");
  if (patience < 1) throw Error(Errc::ConfigError, "patience must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error(Errc::ConfigError, "validation_fraction must lie in [0, 1)");
  }
  if (!(objective.tau > 0.0)) throw Error(Errc::ConfigError, "tau must be > 0");
  if (!(objective.lambda >= 0.0)) throw Error(Errc::ConfigError, "lambda must be >= 0");
}

std::string to_json_line(const EpochLog& log) {
  nlohmann::json j{{"epoch", log.epoch},
                   {"loss_G", log.train.loss_G},
                   {"loss_Gr", log.train.loss_Gr},
                   {"loss_CL", log.train.loss_CL},
                   {"total", log.train.total},
                   {"val_metric", log.val_metric ? nlohmann::json(*log.val_metric) : nlohmann::json()},
                   {"grad_norm", log.grad_norm},
                   {"steps", log.steps}};
  return j.dump();
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

void check_finite(const LossBreakdown& b, int epoch, std::size_t step) {
  const std::pair<const char*, double> terms[] = {
      {"loss_G", b.loss_G}, {"loss_Gr", b.loss_Gr}, {"loss_CL", b.loss_CL}, {"total", b.total}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) {
      throw Error(Errc::NonFiniteLoss, std::string(name) + " = " + std::to_string(value) + " at epoch " +
                                           std::to_string(epoch) + ", step " + std::to_string(step));
    }
  }
}

struct Accumulator {
  LossBreakdown sum;
  double weight = 0.0;

  void add(const LossBreakdown& b, double w) {
    sum.loss_G += w * b.loss_G;
    sum.loss_Gr += w * b.loss_Gr;
    sum.loss_CL += w * b.loss_CL;
    sum.total += w * b.total;
    weight += w;
  }
  LossBreakdown mean(double lambda) const {
    if (weight == 0.0) return {0, 0, 0, 0, lambda};
    return {sum.loss_G / weight, sum.loss_Gr / weight, sum.loss_CL / weight, sum.total / weight, lambda};
  }
};

template <typename Fn>
void for_each_batch(std::span<const std::size_t> order, std::size_t batch_size, Fn fn) {
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    fn(order.subspan(start, std::min(batch_size, order.size() - start)));
  }
}

}  // namespace

TrainResult train_fold(std::span<const Sample* const> samples, std::span<const double> labels, Task task,
                       const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (samples.empty()) throw Error(Errc::EmptyDataset, "empty training set");
  if (samples.size() != labels.size()) throw Error(Errc::BatchMismatch, "label count differs from sample count");

  Rng rng(config.seed ^ kShuffleStream);
  std::vector<std::size_t> train_idx(samples.size()), val_idx;
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
  if (config.early_stopping && config.validation_fraction > 0.0) {
    const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * samples.size()));
    if (n_val >= 1 && n_val < samples.size()) {
      rng.shuffle(std::span<std::size_t>(train_idx));
      val_idx.assign(train_idx.end() - static_cast<long>(n_val), train_idx.end());
      train_idx.resize(train_idx.size() - n_val);
      std::sort(train_idx.begin(), train_idx.end());
      std::sort(val_idx.begin(), val_idx.end());
    }
  }

  ModelConfig mc;
  mc.task = task;
  mc.encoder = config.encoder;
  mc.evidence = config.evidence;
  mc.regression_bound = config.regression_bound;
  mc.seed = config.seed;
  std::vector<double> targets(labels.begin(), labels.end());
  if (task == Task::Regression) {
    std::vector<double> fit_on;
    for (std::size_t i : train_idx) fit_on.push_back(labels[i]);
    mc.scaling = TargetScaling::fit(fit_on, config.target_scaling);
    for (double& t : targets) t = mc.scaling.to_unit(t);
  }

  std::vector<double> sample_weight;
  if (config.class_weight && task == Task::Classification) {
    double pos = 0.0;
    for (std::size_t i : train_idx) pos += labels[i];
    const double n = static_cast<double>(train_idx.size()), neg = n - pos;
    sample_weight.resize(samples.size(), 1.0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double count = labels[i] > 0.5 ? pos : neg;
      if (count > 0.0) sample_weight[i] = n / (2.0 * count);
    }
  }

  TrainResult result;
  result.model = std::make_unique<DualViewModel>(mc);
  DualViewModel& model = *result.model;
  const auto params = model.parameters();
  Adam adam(AdamOptions{config.lr});

  auto gather = [&](std::span<const std::size_t> idx, std::vector<const Sample*>& s, std::vector<double>& y,
                    std::vector<double>& w) {
    s.clear();
    y.clear();
    w.clear();
    for (std::size_t i : idx) {
      s.push_back(samples[i]);
      y.push_back(targets[i]);
      if (!sample_weight.empty()) w.push_back(sample_weight[i]);
    }
  };

  std::vector<Matrix> best_weights;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<const Sample*> bs;
  std::vector<double> by, bw;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(train_idx));
    Accumulator acc;
    EpochLog log;
    log.epoch = epoch;
    double norm_sum = 0.0;
    for_each_batch(train_idx, config.batch_size, [&](std::span<const std::size_t> idx) {
      gather(idx, bs, by, bw);
      const Batch batch = make_batch(bs);
      Tape tape;
      const ModelOutput out = model.forward(tape, batch);
      const LossTerms terms = model.loss(tape, out, batch, by, config.objective, bw);
      const LossBreakdown values = terms.values(config.objective.lambda);
      check_finite(values, epoch, log.steps + 1);
      for (Parameter* p : params) p->zero_grad();
      tape.backward(terms.total);
      double sq = 0.0;
      for (const Parameter* p : params) {
        for (double g : p->grad.data) sq += g * g;
      }
      norm_sum += std::sqrt(sq);
      adam.step(params);
      acc.add(values, static_cast<double>(idx.size()));
      ++log.steps;
    });
    log.train = acc.mean(config.objective.lambda);
    log.grad_norm = log.steps ? norm_sum / static_cast<double>(log.steps) : 0.0;

    if (!val_idx.empty()) {
      Accumulator val;
      for_each_batch(val_idx, config.batch_size, [&](std::span<const std::size_t> idx) {
        gather(idx, bs, by, bw);
        const Batch batch = make_batch(bs);
        Tape tape;
        const ModelOutput out = model.forward(tape, batch);
        val.add(model.loss(tape, out, batch, by, config.objective, bw).values(config.objective.lambda),
                static_cast<double>(idx.size()));
      });
      log.val_metric = val.mean(config.objective.lambda).total;
    }
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.val_metric) {
      if (*log.val_metric < best_val) {
        best_val = *log.val_metric;
        result.best_epoch = epoch;
        since_best = 0;
        best_weights.clear();
        for (const Parameter* p : params) best_weights.push_back(p->value);
      } else if (++since_best >= config.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (!best_weights.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_weights[i];
  }
  return result;
}

std::vector<Prediction> predict_samples(DualViewModel& model, std::span<const Sample* const> samples,
                                        std::size_t batch_size) {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  const auto& cfg = model.config();
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const auto chunk = samples.subspan(start, std::min(batch_size, samples.size() - start));
    for (Prediction p : model.predict(make_batch(chunk))) {
      if (cfg.task == Task::Regression) p.y_pred = cfg.scaling.from_unit(p.y_pred);
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace tms
