#pragma once

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "tms/featurize.hpp"
#include "tms/rng.hpp"
#include "tms/smiles.hpp"

namespace tms::testing {

/// Random simple graph on n nodes with edge probability p and random
/// node/edge features, laid out like a MolGraph.
inline MolGraph random_graph(Rng& rng, std::size_t n, double p) {
  MolGraph g;
  g.node_features = Matrix(n, atom_layout::kWidth);
  for (double& x : g.node_features.data) x = rng.uniform(-1.0, 1.0);
  g.adjacency.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) {
        g.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        g.adjacency[i * n + j] = g.adjacency[j * n + i] = 1;
      }
    }
  }
  g.edge_features = Matrix(g.edges.size(), bond_layout::kWidth);
  for (double& x : g.edge_features.data) x = rng.uniform(-1.0, 1.0);
  return g;
}

/// Relabels atoms by `perm` (old index i becomes perm[i]) and shuffles the
/// bond list order, keeping begin < end.
inline Molecule permute_molecule(const Molecule& mol, const std::vector<int>& perm, Rng& rng) {
  Molecule out;
  const std::size_t n = mol.num_atoms();
  out.atoms.resize(n);
  out.atom_in_ring.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.atoms[perm[i]] = mol.atoms[i];
    out.atom_in_ring[perm[i]] = mol.atom_in_ring[i];
  }
  std::vector<std::size_t> order(mol.num_bonds());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t k : order) {
    Bond b = mol.bonds[k];
    int u = perm[b.begin], v = perm[b.end];
    if (u > v) std::swap(u, v);
    out.bonds.push_back({u, v, b.order});
    out.bond_in_ring.push_back(mol.bond_in_ring[k]);
  }
  return out;
}

inline std::vector<int> random_permutation(Rng& rng, std::size_t n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(std::span<int>(p));
  return p;
}

}  // namespace tms::testing
