// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "graph_util.hpp"
#include "test_util.hpp"
#include "tms/encoder.hpp"
#include "tms/error.hpp"
#include "tms/evaluate.hpp"
#include "tms/model.hpp"
#include "tms/objectives.hpp"
#include "tms/remap.hpp"
#include "tms/smiles.hpp"
#include "tms/train.hpp"

namespace {

using namespace tms;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string fixture(const std::string& name) { return std::string(TMS_FIXTURE_DIR) + "/" + name; }

// Criterion 1: b + d + u = 1, u = 2/S and p+ + p- = 1 for random evidence.
Outcome evidential_identities() {
  Rng rng(1);
  double worst_sum = 0.0, worst_u = 0.0, worst_p = 0.0;
  for (int i = 0; i < 100000; ++i) {
    // Mix of small and large evidence, spanning six decades.
    const double ep = std::pow(10.0, rng.uniform(-3.0, 3.0)) * (rng.uniform() < 0.1 ? 0.0 : 1.0);
    const double em = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const auto c = classification_from_evidence(ep, em);
    worst_sum = std::max(worst_sum, std::abs(c.belief + c.disbelief + c.uncertainty - 1.0));
    worst_u = std::max(worst_u, std::abs(c.uncertainty - 2.0 / c.strength()));
    worst_p = std::max(worst_p, std::abs(c.p_plus + c.p_minus - 1.0));
  }
  const bool ok = worst_sum <= 1e-12 && worst_u <= 1e-12 && worst_p <= 1e-12;
  return {ok, fmt("max |b+d+u-1| %.2e, |u-2/S| %.2e, |p+ + p- - 1| %.2e (tol 1e-12)", worst_sum, worst_u, worst_p)};
}

// Criterion 2: closed forms from the digamma recurrence and the uniform Beta.
Outcome closed_form_losses() {
  const double c = classification_loss(1.0, 1.0, 1.0);
  const double r = regression_loss(1.0, 1.0, 0.5);
  const bool ok = c == 1.0 && std::abs(r - 1.0 / 12.0) <= 1e-12;
  return {ok, fmt("classification %.17g (want exactly 1), regression %.17g (want 1/12 within 1e-12)", c, r)};
}

// Jittered stratified draws from Beta(a, b): stratum i contributes one
// sample at quantile (i + v_i) / n with v_i ~ U(0, 1). Quantiles are exact
// (ibeta_inv) in the tail strata and every `anchor` strata; in between they
// follow dp/du = 1 / pdf(p) with one RK4 step per stratum. `drift` reports
// the largest gap between the integrated path and the next exact anchor.
struct BetaDraws {
  std::vector<double> p;
  double drift = 0.0;
};

BetaDraws stratified_beta(double a, double b, std::size_t n, Rng& rng) {
  constexpr std::size_t tail = 2000, anchor = 256;
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto slope = [&](double p) { return std::exp(lbeta - (a - 1.0) * std::log(p) - (b - 1.0) * std::log1p(-p)); };
  BetaDraws out;
  out.p.resize(n);
  double p = 0.0, u = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double next_u = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n);
    if (i < tail || i + tail >= n) {
      p = boost::math::ibeta_inv(a, b, next_u);
    } else {
      const double h = next_u - u;
      const double k1 = slope(p), k2 = slope(p + 0.5 * h * k1), k3 = slope(p + 0.5 * h * k2), k4 = slope(p + h * k3);
      const double stepped = p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (i % anchor == 0) {
        p = boost::math::ibeta_inv(a, b, next_u);
        out.drift = std::max(out.drift, std::abs(stepped - p));
      } else {
        p = stepped;
      }
    }
    u = next_u;
    out.p[i] = p;
  }
  return out;
}

// Criterion 3: both expected losses against sample means of 1e6 draws.
Outcome monte_carlo_losses() {
  Rng rng(3);
  double worst_c = 0.0, worst_r = 0.0, drift = 0.0;
  for (int t = 0; t < 20; ++t) {
    // log-uniform on [0.5, 20]; below 0.5 the upper quantiles round to 1.0 in double.
    const double a = 0.5 * std::pow(40.0, rng.uniform()), b = 0.5 * std::pow(40.0, rng.uniform());
    const double y_class = t % 2 == 0 ? 1.0 : 0.0, y_reg = rng.uniform(0.01, 0.99);
    const auto draws = stratified_beta(a, b, 1000000, rng);
    drift = std::max(drift, draws.drift);
    double bce = 0.0, se = 0.0;
    for (double p : draws.p) {
      bce += y_class > 0.5 ? -std::log(p) : -std::log1p(-p);
      se += (y_reg - p) * (y_reg - p);
    }
    const double n = static_cast<double>(draws.p.size());
    worst_c = std::max(worst_c, std::abs(bce / n - classification_loss(a, b, y_class)));
    worst_r = std::max(worst_r, std::abs(se / n - regression_loss(a, b, y_reg)));
  }
  const bool ok = worst_c <= 1e-3 && worst_r <= 1e-3;
  return {ok, fmt("20 triples x 1e6 stratified draws: max |BCE err| %.2e, max |SE err| %.2e (tol 1e-3); "
                  "sampler drift %.1e",
                  worst_c, worst_r, drift)};
}

// Criterion 4: central differences on every parameter of the full model.
Outcome gradient_check(const EncoderConfig& encoder) {
  ModelConfig config;
  config.encoder = encoder;
  config.seed = 4;
  DualViewModel model(config);
  std::vector<Sample> samples;
  for (const char* smi : {"OCC(=O)Nc1ccccc1", "CC(C)CBr", "O=C1CCCN1C"}) samples.push_back(prepare_sample(parse_smiles(smi)));
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const Batch batch = make_batch(ptrs);
  const std::vector<double> labels{1.0, 0.0, 1.0};
  const ObjectiveConfig objective;
  const auto params = model.parameters();
  const auto result = testing::finite_difference_check(
      params,
      [&](Tape& tape) {
        const auto out = model.forward(tape, batch);
        return model.loss(tape, out, batch, labels, objective).total;
      },
      1e-4, 1e-7, 1e-5);
  std::string detail = fmt("K=%d d=%d proj=%d, %zu entries in %zu arrays, %zu beyond rel 1e-4 (+1e-7 abs floor)",
                           encoder.num_gin_layers, encoder.hidden_dim, encoder.projection_dim, result.checked,
                           params.size(), result.failures);
  if (result.failures > 0) detail += "; worst " + result.worst_where;
  return {result.failures == 0 && result.checked > 0, detail};
}

std::size_t pairs_through_atoms(const MolGraph& g) {
  std::vector<std::size_t> deg(g.num_nodes(), 0);
  for (auto [u, v] : g.edges) ++deg[u], ++deg[v];
  std::size_t total = 0;
  for (std::size_t d : deg) total += d * (d - 1) / 2;
  return total;
}

std::vector<std::string> corpus_smiles() {
  std::vector<std::string> out;
  for (const auto& row : read_csv(fixture("parser_reference.csv")).rows) out.push_back(row[1]);
  for (const char* name : {"toy_classification.csv", "toy_regression.csv"}) {
    const auto table = read_csv(fixture(name));
    const std::size_t col = table.column("smiles");
    for (const auto& row : table.rows) out.push_back(row[col]);
  }
  return out;
}

// Criterion 5: remap against the line-graph oracle and the degree count.
Outcome remap_oracle() {
  Rng rng(5);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const auto g = testing::random_graph(rng, n, rng.uniform(0.1, 0.8));
    if (remap_topology(g).adjacency != line_graph_oracle(g)) ++mismatches;
  }
  int count_errors = 0;
  const auto corpus = corpus_smiles();
  for (const auto& smi : corpus) {
    const auto g = build_graph(parse_smiles(smi));
    if (remap_topology(g).num_edges() != pairs_through_atoms(g)) ++count_errors;
  }
  return {mismatches == 0 && count_errors == 0,
          fmt("%d/500 random graphs differ from oracle; %d/%zu corpus molecules break sum C(deg,2)", mismatches,
              count_errors, corpus.size())};
}

std::vector<int> split_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ';');) out.push_back(std::stoi(item));
  return out;
}

// Criterion 6: exact agreement with the reference toolkit fixture.
Outcome parser_oracle() {
  const auto table = read_csv(fixture("parser_reference.csv"));
  int bad = 0;
  std::string first;
  for (const auto& row : table.rows) {
    bool ok = true;
    try {
      const auto m = parse_smiles(row[1]);
      const auto h = split_ints(row[4]), arom = split_ints(row[5]);
      ok = m.num_atoms() == static_cast<std::size_t>(std::stoi(row[2])) &&
           m.num_bonds() == static_cast<std::size_t>(std::stoi(row[3])) && h.size() == m.num_atoms() &&
           arom.size() == m.num_atoms();
      for (std::size_t i = 0; ok && i < m.num_atoms(); ++i) {
        ok = m.atoms[i].hydrogens == h[i] && m.atoms[i].aromatic == (arom[i] != 0);
      }
    } catch (const Error&) {
      ok = false;
    }
    if (!ok && bad++ == 0) first = row[0];
  }
  const bool pass = bad == 0 && table.rows.size() >= 50;
  return {pass, fmt("%d/%zu fixture molecules differ in atoms, bonds, implicit H or aromaticity%s%s", bad,
                    table.rows.size(), bad ? "; first: " : "", first.c_str())};
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

// Criterion 7: z invariant under atom relabeling; normalization hits s*sqrt(|V|).
Outcome encoder_invariants() {
  ModelConfig config;
  DualViewModel model(config);
  const std::vector<std::string> smiles{"OCC(=O)Nc1ccccc1", "CC(C)CBr", "O=C1CCCN1C", "Clc1ccc(cc1)C(F)(F)F",
                                        "CC(=O)Oc1ccccc1C(=O)O"};
  Rng rng(7);
  double worst_z = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto mol = parse_smiles(smiles[static_cast<std::size_t>(trial) % smiles.size()]);
    const auto perm = testing::random_permutation(rng, mol.num_atoms());
    const Sample a = prepare_sample(mol), b = prepare_sample(testing::permute_molecule(mol, perm, rng));
    const Sample* pa[] = {&a};
    const Sample* pb[] = {&b};
    const Batch ba = make_batch(pa), bb = make_batch(pb);
    Tape ta, tb;
    const auto oa = model.forward(ta, ba), ob = model.forward(tb, bb);
    worst_z = std::max({worst_z, max_abs_diff(oa.mol.z.value(), ob.mol.z.value()),
                        max_abs_diff(oa.bond.z.value(), ob.bond.z.value())});
  }

  double worst_norm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t graphs = 1 + rng.below(4);
    std::vector<int> node_graph;
    std::vector<std::size_t> sizes;
    for (std::size_t g = 0; g < graphs; ++g) {
      sizes.push_back(2 + rng.below(20));
      node_graph.insert(node_graph.end(), sizes.back(), static_cast<int>(g));
    }
    const double s = trial % 2 == 0 ? 1e-6 : rng.uniform(0.1, 3.0);
    Tape tape;
    Var h = tape.constant(testing::random_matrix(rng, node_graph.size(), 16, -5.0, 5.0));
    const Matrix& out = anti_smoothing_normalize(h, node_graph, graphs, s).value();
    std::vector<double> sq(graphs, 0.0);
    for (std::size_t r = 0; r < out.rows; ++r) {
      for (std::size_t c = 0; c < out.cols; ++c) sq[node_graph[r]] += out(r, c) * out(r, c);
    }
    for (std::size_t g = 0; g < graphs; ++g) {
      worst_norm = std::max(worst_norm, std::abs(std::sqrt(sq[g]) - s * std::sqrt(static_cast<double>(sizes[g]))));
    }
  }
  return {worst_z <= 1e-12 && worst_norm <= 1e-9,
          fmt("max |z - z_perm| %.2e over 100 relabelings (tol 1e-12); max | ||H||_F - s sqrt(|V|) | %.2e (tol 1e-9)",
              worst_z, worst_norm)};
}

struct OverfitRun {
  std::vector<Prediction> predictions;
  std::vector<double> losses;
  double accuracy = 0.0;
};

OverfitRun overfit_once(const std::vector<const Sample*>& ptrs, const std::vector<double>& labels) {
  TrainConfig config;
  config.epochs = 200;
  config.early_stopping = false;
  config.batch_size = 20;
  OverfitRun run;
  const auto result = train_fold(ptrs, labels, Task::Classification, config);
  for (const auto& log : result.history) run.losses.push_back(log.train.total);
  run.predictions = predict_samples(*result.model, ptrs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    correct += (run.predictions[i].y_pred >= kDecisionThreshold) == (labels[i] > 0.5);
  }
  run.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return run;
}

// Criterion 8: the toy set is learnable and training is reproducible.
Outcome overfit_toy() {
  Schema schema;
  schema.id_col = "id";
  const auto dataset = load_dataset(fixture("toy_classification.csv"), schema);
  const auto samples = featurize_all(dataset.molecules, 1);
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const auto labels = dataset.labels();
  const auto first = overfit_once(ptrs, labels), second = overfit_once(ptrs, labels);
  bool identical = first.losses == second.losses;
  for (std::size_t i = 0; i < first.predictions.size(); ++i) {
    identical = identical && first.predictions[i].y_pred == second.predictions[i].y_pred &&
                first.predictions[i].uncertainty == second.predictions[i].uncertainty;
  }
  return {first.accuracy >= 0.95 && identical,
          fmt("%zu molecules, 200 epochs, train ACC %.3f (need >= 0.95); repeat run %s", dataset.size(),
              first.accuracy, identical ? "bit-identical" : "DIFFERS")};
}

// Criterion 9: thresholding on uncertainty helps when errors concentrate at
// high u; contrastive loss bounds.
Outcome retention_and_bounds() {
  // Evidence E ~ U(0, 10) and P(correct) = 1 - 1/(E + 2) give expected ACC
  // 1 - ln(6)/10 on everything and 1 - ln(12/7)/5 on the half with E > 5.
  constexpr double kMaxEvidence = 10.0;
  const double expected_gain = std::log(6.0) / 10.0 - std::log(12.0 / 7.0) / 5.0;
  Rng rng(9);
  std::vector<PredictionRecord> records;
  for (int i = 0; i < 4000; ++i) {
    const double evidence = rng.uniform(0.0, kMaxEvidence);
    const double u = 2.0 / (evidence + 2.0);
    // Calibrated by construction: a sample is called correctly with
    // probability 1 - u/2, a coin flip when there is no evidence.
    const bool correct = rng.uniform() < 1.0 - u / 2.0;
    const bool call_positive = rng.uniform() < 0.5;
    const double truth = correct == call_positive ? 1.0 : 0.0;
    const auto c = classification_from_evidence(call_positive ? evidence : 0.0, call_positive ? 0.0 : evidence);
    const double p = c.p_plus;
    records.push_back({std::to_string(i), truth, p, c.uncertainty, c.alpha, c.beta});
  }
  std::vector<double> us;
  for (const auto& r : records) us.push_back(r.uncertainty);
  std::nth_element(us.begin(), us.begin() + static_cast<long>(us.size() / 2 - 1), us.end());
  const double median = us[us.size() / 2 - 1];
  const std::vector<double> thresholds{1.0, median};
  const auto curve = retention_curve(records, Task::Classification, "ACC", thresholds);
  const bool have_curve = curve.size() == 2 && std::abs(curve[1].first - 0.5) < 1e-12;
  const double gain = have_curve ? curve[1].second - curve[0].second : 0.0;

  double min_loss = std::numeric_limits<double>::infinity(), worst_uniform = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = 2 + rng.below(63), d = 1 + rng.below(32);
    const double tau = rng.uniform(0.05, 2.0);
    const Matrix zm = testing::random_matrix(rng, b, d, -3.0, 3.0), zr = testing::random_matrix(rng, b, d, -3.0, 3.0);
    min_loss = std::min(min_loss, contrastive_loss(zm, zr, tau));
    // Uniform similarity: every bond-view row equal, so each row of the
    // similarity matrix is constant.
    Matrix same(b, d);
    const Matrix row = testing::random_matrix(rng, 1, d, -3.0, 3.0);
    for (std::size_t r = 0; r < b; ++r) std::copy(row.data.begin(), row.data.end(), same.data.begin() + r * d);
    worst_uniform =
        std::max(worst_uniform, std::abs(contrastive_loss(zm, same, tau) - std::log(static_cast<double>(b))));
  }
  const bool ok = have_curve && gain >= 0.05 && min_loss >= 0.0 && worst_uniform <= 1e-12;
  return {ok, fmt("ACC %.4f at 100%% -> %.4f at 50%% retention (gain %.1f points, expected %.1f, need >= 5); "
                  "min L_CL %.3g over random batches (need >= 0); max |L_CL - log B| %.1e under uniform similarity",
                  have_curve ? curve[0].second : 0.0, have_curve ? curve[1].second : 0.0, 100.0 * gain,
                  100.0 * expected_gain, min_loss,
                  worst_uniform)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  EncoderConfig grad_encoder;
  grad_encoder.hidden_dim = 16;
  grad_encoder.projection_dim = 16;
  const std::vector<Criterion> criteria{
      {1, "evidential identities over 1e5 evidence pairs", 1.0, evidential_identities},
      {2, "closed-form loss values", 0.0, closed_form_losses},
      {3, "expected losses match Monte-Carlo Beta averages", 60.0, monte_carlo_losses},
      {4, "full-model gradient check", 60.0, [&] { return gradient_check(grad_encoder); }},
      {5, "bond-view remap oracle", 0.0, remap_oracle},
      {6, "SMILES parser reference fixture", 0.0, parser_oracle},
      {7, "encoder invariants", 0.0, encoder_invariants},
      {8, "overfit toy classification set", 300.0, overfit_toy},
      {9, "uncertainty thresholding and contrastive bounds", 0.0, retention_and_bounds},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s == 0.0 || secs < c.budget_s;
    const bool pass = outcome.pass && in_time;
    failed += !pass;
    std::printf("%s [%d] %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, outcome.detail.c_str(), secs,
                c.budget_s > 0.0 ? fmt(", limit %.0fs", c.budget_s).c_str() : "");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
