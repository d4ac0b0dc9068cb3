#include "tms/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tms/error.hpp"
#include "tms/serialize.hpp"

namespace tms {

using nlohmann::json;

std::string to_string(Task task) { return task == Task::Classification ? "classification" : "regression"; }

Task task_from_string(const std::string& text) {
  if (text == "classification" || text == "classify") return Task::Classification;
  if (text == "regression" || text == "regress") return Task::Regression;
  throw Error(Errc::ConfigError, "unknown task '" + text + "'");
}

TargetScaling TargetScaling::fit(std::span<const double> targets, const std::string& kind) {
  TargetScaling s;
  s.kind = kind;
  if (targets.empty()) return s;
  const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  s.min = *lo;
  s.max = *hi;
  const double n = static_cast<double>(targets.size());
  s.mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
  double ss = 0.0;
  for (double t : targets) ss += (t - s.mean) * (t - s.mean);
  s.stddev = std::sqrt(ss / n);
  if (s.stddev == 0.0) s.stddev = 1.0;
  if (kind != "minmax" && kind != "zscore" && kind != "none") {
    throw Error(Errc::ConfigError, "unknown target scaling '" + kind + "'");
  }
  return s;
}

double TargetScaling::to_unit(double y) const {
  if (kind == "none") return y;
  if (kind == "zscore") return 1.0 / (1.0 + std::exp(-(y - mean) / stddev));
  const double span = max - min;
  const double t = span > 0.0 ? (y - min) / span : 0.5;
  return std::clamp(low + (high - low) * t, low, high);
}

double TargetScaling::from_unit(double u) const {
  if (kind == "none") return u;
  if (kind == "zscore") {
    const double c = std::clamp(u, 1e-12, 1.0 - 1e-12);
    return mean + stddev * std::log(c / (1.0 - c));
  }
  return min + (u - low) / (high - low) * (max - min);
}

Sample prepare_sample(const Molecule& mol) {
  Sample s;
  s.mol = build_graph(mol);
  s.bond = remap_topology(s.mol);
  return s;
}

Batch make_batch(std::span<const Sample* const> samples) {
  std::vector<const MolGraph*> mols;
  std::vector<const BondGraph*> bonds;
  Batch b;
  for (const Sample* s : samples) {
    mols.push_back(&s->mol);
    bonds.push_back(&s->bond);
    b.bond_present.push_back(s->bond.num_nodes() > 0 ? 1.0 : 0.0);
  }
  b.mol = batch_molecular(mols);
  b.bond = batch_bond(bonds);
  return b;
}

LossBreakdown LossTerms::values(double lambda) const {
  LossBreakdown b = combined_loss(loss_G.item(), loss_Gr.item(), loss_CL.item(), lambda);
  b.total = total.item();
  return b;
}

DualViewModel::DualViewModel(const ModelConfig& config) : config_(config), rng_(config.seed) {
  config_.encoder.validate();
  const std::size_t dv = atom_layout::kWidth, de = bond_layout::kWidth;
  mol_ = std::make_unique<ViewEncoder>(ViewKind::Molecular, config_.encoder, dv, 0, rng_);
  bond_ = std::make_unique<ViewEncoder>(ViewKind::Bond, config_.encoder, 2 * dv + de, 2 * de + dv, rng_);
  const auto pd = static_cast<std::size_t>(config_.encoder.projection_dim);
  mol_head_ = std::make_unique<Linear>("mol.head", pd, 2, rng_);
  bond_head_ = std::make_unique<Linear>("bond.head", pd, 2, rng_);
}

BetaParams DualViewModel::head(Tape& tape, Linear& layer, Var p) const {
  Var logits = layer(tape, p);
  return config_.task == Task::Classification ? classification_head(logits, config_.evidence)
                                              : regression_head(logits, config_.regression_bound);
}

ModelOutput DualViewModel::forward(Tape& tape, const Batch& batch) {
  ModelOutput out;
  out.mol = mol_->encode(tape, batch.mol);
  out.bond = bond_->encode(tape, batch.bond);
  out.mol_head = head(tape, *mol_head_, out.mol.p);
  out.bond_head = head(tape, *bond_head_, out.bond.p);
  return out;
}

LossTerms DualViewModel::loss(Tape& tape, const ModelOutput& out, const Batch& batch,
                              std::span<const double> targets, const ObjectiveConfig& objective,
                              std::span<const double> weights) const {
  const std::size_t n = batch.size();
  if (!weights.empty() && weights.size() != n) throw Error(Errc::BatchMismatch, "weight count differs from batch");
  auto per_sample = [&](const BetaParams& params) {
    Var l = config_.task == Task::Classification ? classification_loss(params, targets)
                                                 : regression_loss(params, targets);
    return weights.empty() ? l : mul(tape.constant(Matrix::column(weights)), l);
  };
  LossTerms terms;
  terms.loss_G = mean(per_sample(out.mol_head));

  // Molecules without bonds have no bond view; their term is dropped.
  const double present = std::accumulate(batch.bond_present.begin(), batch.bond_present.end(), 0.0);
  if (present > 0.0) {
    Matrix mask = Matrix::column(batch.bond_present);
    for (double& w : mask.data) w /= present;
    terms.loss_Gr = sum(mul(tape.constant(std::move(mask)), per_sample(out.bond_head)));
  } else {
    terms.loss_Gr = tape.constant(Matrix::scalar(0.0));
  }
  terms.loss_CL = contrastive_loss(out.mol.z, out.bond.z, objective.tau, objective.symmetric_contrastive);
  terms.total = add(add(terms.loss_G, terms.loss_Gr), scale(terms.loss_CL, objective.lambda));
  return terms;
}

std::vector<Prediction> DualViewModel::predict(const Batch& batch) {
  Tape tape;
  const ModelOutput out = forward(tape, batch);
  const Matrix& am = out.mol_head.alpha.value();
  const Matrix& bm = out.mol_head.beta.value();
  const Matrix& ab = out.bond_head.alpha.value();
  const Matrix& bb = out.bond_head.beta.value();
  std::vector<Prediction> preds(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const bool has_bond = batch.bond_present[i] > 0.0;
    Prediction& p = preds[i];
    if (config_.task == Task::Classification) {
      const auto mol = classification_from_evidence(am.data[i] - 1.0, bm.data[i] - 1.0);
      std::optional<EvidentialClassification> bond;
      if (has_bond) bond = classification_from_evidence(ab.data[i] - 1.0, bb.data[i] - 1.0);
      const auto fused = fuse_predictions(mol, bond);
      p = {fused.p_plus, fused.uncertainty, fused.alpha, fused.beta};
    } else {
      const auto mol = regression_from_beta(am.data[i], bm.data[i]);
      std::optional<EvidentialRegression> bond;
      if (has_bond) bond = regression_from_beta(ab.data[i], bb.data[i]);
      const auto fused = fuse_predictions(mol, bond);
      p = {fused.mean, fused.variance, fused.alpha, fused.beta};
    }
  }
  return preds;
}

std::vector<Parameter*> DualViewModel::parameters() {
  std::vector<Parameter*> out;
  mol_->collect(out);
  bond_->collect(out);
  mol_head_->collect(out);
  bond_head_->collect(out);
  return out;
}

namespace {

const char* activation_name(EvidenceActivation a) {
  switch (a) {
    case EvidenceActivation::Softplus: return "softplus";
    case EvidenceActivation::Relu: return "relu";
    case EvidenceActivation::Exp: return "exp";
  }
  return "softplus";
}

EvidenceActivation activation_from(const std::string& s) {
  if (s == "softplus") return EvidenceActivation::Softplus;
  if (s == "relu") return EvidenceActivation::Relu;
  if (s == "exp") return EvidenceActivation::Exp;
  throw Error(Errc::ConfigError, "unknown evidence activation '" + s + "'");
}

RegressionBound bound_from(const std::string& s) {
  if (s == "sigmoid") return RegressionBound::Sigmoid;
  if (s == "softplus") return RegressionBound::Softplus;
  throw Error(Errc::ConfigError, "unknown regression bound '" + s + "'");
}

json to_json(const ModelConfig& c) {
  const auto& e = c.encoder;
  return json{
      {"task", to_string(c.task)},
      {"encoder",
       {{"num_gin_layers", e.num_gin_layers},
        {"hidden_dim", e.hidden_dim},
        {"mlp_layers", e.mlp_layers},
        {"epsilon_init", e.epsilon_init},
        {"scaling_factor", e.scaling_factor},
        {"projection_dim", e.projection_dim},
        {"normalize", e.normalize}}},
      {"evidence_activation", activation_name(c.evidence)},
      {"regression_bound", c.regression_bound == RegressionBound::Sigmoid ? "sigmoid" : "softplus"},
      {"target_scaling",
       {{"kind", c.scaling.kind},
        {"min", c.scaling.min},
        {"max", c.scaling.max},
        {"mean", c.scaling.mean},
        {"stddev", c.scaling.stddev},
        {"low", c.scaling.low},
        {"high", c.scaling.high}}},
      {"seed", c.seed},
      {"atom_feature_dim", atom_layout::kWidth},
      {"bond_feature_dim", bond_layout::kWidth},
  };
}

}  // namespace

std::string model_config_json(const ModelConfig& config) { return to_json(config).dump(2); }

ModelConfig model_config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const json& m = j.contains("model") ? j.at("model") : j;
    if (m.value("atom_feature_dim", atom_layout::kWidth) != atom_layout::kWidth ||
        m.value("bond_feature_dim", bond_layout::kWidth) != bond_layout::kWidth) {
      throw Error(Errc::ConfigError, "checkpoint was written with a different feature layout");
    }
    ModelConfig c;
    c.task = task_from_string(m.at("task").get<std::string>());
    const json& e = m.at("encoder");
    c.encoder.num_gin_layers = e.at("num_gin_layers").get<int>();
    c.encoder.hidden_dim = e.at("hidden_dim").get<int>();
    c.encoder.mlp_layers = e.at("mlp_layers").get<int>();
    c.encoder.epsilon_init = e.at("epsilon_init").get<double>();
    c.encoder.scaling_factor = e.at("scaling_factor").get<double>();
    c.encoder.projection_dim = e.at("projection_dim").get<int>();
    c.encoder.normalize = e.at("normalize").get<bool>();
    c.evidence = activation_from(m.at("evidence_activation").get<std::string>());
    c.regression_bound = bound_from(m.at("regression_bound").get<std::string>());
    const json& s = m.at("target_scaling");
    c.scaling.kind = s.at("kind").get<std::string>();
    c.scaling.min = s.at("min").get<double>();
    c.scaling.max = s.at("max").get<double>();
    c.scaling.mean = s.at("mean").get<double>();
    c.scaling.stddev = s.at("stddev").get<double>();
    c.scaling.low = s.at("low").get<double>();
    c.scaling.high = s.at("high").get<double>();
    c.seed = m.value("seed", std::uint64_t{42});
    return c;
  } catch (const json::exception& ex) {
    throw Error(Errc::ConfigError, std::string("bad model config: ") + ex.what());
  }
}

void DualViewModel::save(const std::filesystem::path& stem, const std::string& extra_json) {
  auto params = parameters();
  std::vector<const Parameter*> cparams(params.begin(), params.end());
  write_tms1(std::filesystem::path(stem).concat(".tms"), cparams);
  json side{{"format", "TMS1"}, {"model", to_json(config_)}};
  try {
    side["extra"] = json::parse(extra_json);
  } catch (const json::exception&) {
    throw Error(Errc::ConfigError, "extra checkpoint metadata is not valid JSON");
  }
  std::ofstream os(std::filesystem::path(stem).concat(".json"));
  os << side.dump(2) << '\n';
  if (!os) throw Error(Errc::FormatError, "cannot write checkpoint sidecar for " + stem.string());
}

DualViewModel DualViewModel::load(const std::filesystem::path& stem) {
  std::ifstream is(std::filesystem::path(stem).concat(".json"));
  if (!is) throw Error(Errc::ConfigError, "missing checkpoint sidecar " + stem.string() + ".json");
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  DualViewModel model(model_config_from_json(text));
  std::vector<NamedArray> arrays;
  try {
    arrays = read_tms1(std::filesystem::path(stem).concat(".tms"));
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  std::map<std::string, const Matrix*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a.value;
  const auto params = model.parameters();
  if (by_name.size() != params.size()) {
    throw Error(Errc::ConfigError, "checkpoint holds " + std::to_string(by_name.size()) + " arrays, model expects " +
                                       std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    auto it = by_name.find(p->name());
    if (it == by_name.end()) throw Error(Errc::ConfigError, "checkpoint lacks " + p->name());
    if (!it->second->same_shape(p->value)) {
      throw Error(Errc::ConfigError, "shape mismatch for " + p->name() + ": " + it->second->shape_string() + " vs " +
                                         p->value.shape_string());
    }
    p->value = *it->second;
  }
  return model;
}

}  // namespace tms
