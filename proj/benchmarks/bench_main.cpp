#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "tms/featurize.hpp"
#include "tms/model.hpp"
#include "tms/objectives.hpp"
#include "tms/remap.hpp"
#include "tms/rng.hpp"
#include "tms/smiles.hpp"
#include "tms/tape.hpp"

namespace {

const std::vector<std::string>& corpus() {
  static const std::vector<std::string> smiles = {
      "CCO",
      "c1ccccc1",
      "CC(=O)Oc1ccccc1C(=O)O",
      "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
      "CC(C)Cc1ccc(cc1)[C@@H](C)C(=O)O",
      "O=C(O)C[C@H](N)C(=O)O",
      "c1ccc2c(c1)ccc1ccccc12",
      "C1CCC(CC1)NC(=O)c1ccncc1",
  };
  return smiles;
}

std::vector<tms::Sample> corpus_samples(std::size_t n) {
  std::vector<tms::Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(tms::prepare_sample(tms::parse_smiles(corpus()[i % corpus().size()])));
  return out;
}

tms::Batch corpus_batch(const std::vector<tms::Sample>& samples) {
  std::vector<const tms::Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return tms::make_batch(ptrs);
}

void BM_ParseSmiles(benchmark::State& state) {
  for (auto _ : state) {
    for (const auto& s : corpus()) benchmark::DoNotOptimize(tms::parse_smiles(s));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(corpus().size()));
}
BENCHMARK(BM_ParseSmiles);

void BM_Featurize(benchmark::State& state) {
  std::vector<tms::Molecule> mols;
  for (const auto& s : corpus()) mols.push_back(tms::parse_smiles(s));
  for (auto _ : state) {
    for (const auto& m : mols) benchmark::DoNotOptimize(tms::build_graph(m));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(mols.size()));
}
BENCHMARK(BM_Featurize);

void BM_RemapTopology(benchmark::State& state) {
  std::vector<tms::MolGraph> graphs;
  for (const auto& s : corpus()) graphs.push_back(tms::build_graph(tms::parse_smiles(s)));
  for (auto _ : state) {
    for (const auto& g : graphs) benchmark::DoNotOptimize(tms::remap_topology(g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(graphs.size()));
}
BENCHMARK(BM_RemapTopology);

void BM_ForwardBackward(benchmark::State& state) {
  const auto samples = corpus_samples(static_cast<std::size_t>(state.range(0)));
  const tms::Batch batch = corpus_batch(samples);
  std::vector<double> targets(samples.size());
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = static_cast<double>(i % 2);
  tms::DualViewModel model(tms::ModelConfig{});
  const tms::ObjectiveConfig objective;
  tms::Tape tape;
  for (auto _ : state) {
    tape.clear();
    const auto out = model.forward(tape, batch);
    const auto terms = model.loss(tape, out, batch, targets, objective);
    tape.backward(terms.total);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto samples = corpus_samples(static_cast<std::size_t>(state.range(0)));
  const tms::Batch batch = corpus_batch(samples);
  tms::DualViewModel model(tms::ModelConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Predict)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_EvidentialLosses(benchmark::State& state) {
  tms::Rng rng(7);
  std::vector<double> a(1024), b(1024), y(1024);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(1.0, 20.0);
    b[i] = rng.uniform(1.0, 20.0);
    y[i] = rng.uniform(0.01, 0.99);
  }
  for (auto _ : state) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sum += tms::classification_loss(a[i], b[i], i % 2 ? 1.0 : 0.0) + tms::regression_loss(a[i], b[i], y[i]);
    }
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(a.size()));
}
BENCHMARK(BM_EvidentialLosses);

void BM_ContrastiveLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  tms::Rng rng(11);
  tms::Matrix zm(n, 64), zb(n, 64);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 64; ++j) {
      zm(i, j) = rng.uniform(-1.0, 1.0);
      zb(i, j) = rng.uniform(-1.0, 1.0);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(tms::contrastive_loss(zm, zb, 0.5));
}
BENCHMARK(BM_ContrastiveLoss)->Arg(32)->Arg(128);

}  // namespace
BENCHMARK_MAIN();
