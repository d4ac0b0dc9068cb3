#include "tms/featurize.hpp"

#include <algorithm>

#include "tms/error.hpp"

namespace tms {

Hybridization hybridization(const Molecule& mol, int atom) {
  const Atom& a = mol.atoms[atom];
  int doubles = 0, triples = 0, degree = 0;
  for (const auto& b : mol.bonds) {
    if (b.begin != atom && b.end != atom) continue;
    ++degree;
    if (b.order == BondOrder::Double) ++doubles;
    if (b.order == BondOrder::Triple) ++triples;
  }
  if (triples > 0 || doubles >= 2) return Hybridization::SP;
  if (a.aromatic || doubles == 1) return Hybridization::SP2;
  if (degree + a.hydrogens > 0) return Hybridization::SP3;
  return Hybridization::Other;
}

std::vector<bool> conjugated_bonds(const Molecule& mol) {
  const auto incident = mol.incident_bonds();
  auto unsaturated = [&](const Bond& b) { return b.order != BondOrder::Single; };
  // Atom carries a pi bond other than `skip`.
  auto has_pi_except = [&](int atom, int skip) {
    for (int bi : incident[atom]) {
      if (bi != skip && unsaturated(mol.bonds[bi])) return true;
    }
    return false;
  };
  std::vector<bool> conj(mol.bonds.size(), false);
  for (std::size_t bi = 0; bi < mol.bonds.size(); ++bi) {
    const Bond& b = mol.bonds[bi];
    const int self = static_cast<int>(bi);
    if (b.order == BondOrder::Aromatic) {
      conj[bi] = true;
    } else if (b.order == BondOrder::Single) {
      conj[bi] = has_pi_except(b.begin, self) && has_pi_except(b.end, self);
    }
  }
  // A multiple bond is conjugated when it touches a conjugated single or aromatic bond.
  for (std::size_t bi = 0; bi < mol.bonds.size(); ++bi) {
    const Bond& b = mol.bonds[bi];
    if (!unsaturated(b) || b.order == BondOrder::Aromatic) continue;
    for (int end : {b.begin, b.end}) {
      for (int other : incident[end]) {
        if (other != static_cast<int>(bi) && conj[other]) conj[bi] = true;
      }
    }
  }
  return conj;
}

Matrix featurize_atoms(const Molecule& mol) {
  namespace L = atom_layout;
  const auto n = mol.atoms.size();
  Matrix x(n, L::kWidth);
  std::vector<int> degree(n, 0);
  for (const auto& b : mol.bonds) {
    ++degree[b.begin];
    ++degree[b.end];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = mol.atoms[i];
    auto row = x.row_span(i);
    row[L::kElement + static_cast<std::size_t>(a.element)] = 1.0;
    row[L::kDegree + static_cast<std::size_t>(std::clamp(degree[i], 0, 6))] = 1.0;
    row[L::kCharge + static_cast<std::size_t>(std::clamp(a.formal_charge, -2, 2) + 2)] = 1.0;
    row[L::kHydrogens + static_cast<std::size_t>(std::clamp(a.hydrogens, 0, 4))] = 1.0;
    row[L::kHybrid + static_cast<std::size_t>(hybridization(mol, static_cast<int>(i)))] = 1.0;
    row[L::kAromatic] = a.aromatic ? 1.0 : 0.0;
    row[L::kMass] = standard_atomic_weight(a.element) / 100.0;
  }
  return x;
}

Matrix featurize_bonds(const Molecule& mol) {
  namespace L = bond_layout;
  const auto conj = conjugated_bonds(mol);
  Matrix e(mol.bonds.size(), L::kWidth);
  for (std::size_t bi = 0; bi < mol.bonds.size(); ++bi) {
    auto row = e.row_span(bi);
    row[L::kType + static_cast<std::size_t>(mol.bonds[bi].order)] = 1.0;
    row[L::kInRing] = mol.bond_in_ring[bi] ? 1.0 : 0.0;
    row[L::kConjugated] = conj[bi] ? 1.0 : 0.0;
  }
  return e;
}

MolGraph build_graph(const Molecule& mol) {
  if (mol.atoms.empty()) throw Error(Errc::EmptyMolecule, "molecule has no atoms");
  MolGraph g;
  g.node_features = featurize_atoms(mol);
  g.edge_features = featurize_bonds(mol);
  const auto n = mol.atoms.size();
  g.adjacency.assign(n * n, 0);
  g.edges.reserve(mol.bonds.size());
  for (const auto& b : mol.bonds) {
    const int lo = std::min(b.begin, b.end), hi = std::max(b.begin, b.end);
    g.edges.emplace_back(lo, hi);
    g.adjacency[lo * n + hi] = 1;
    g.adjacency[hi * n + lo] = 1;
  }
  return g;
}

}  // namespace tms
