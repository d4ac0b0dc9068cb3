#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tms/matrix.hpp"
#include "tms/smiles.hpp"

namespace tms {

/// Atom feature layout. Blocks appear in this order in every row.
namespace atom_layout {
inline constexpr std::size_t kElement = 0;        // 10 elements + other
inline constexpr std::size_t kElementSize = kNumElements + 1;
inline constexpr std::size_t kDegree = kElement + kElementSize;  // 0..6
inline constexpr std::size_t kDegreeSize = 7;
inline constexpr std::size_t kCharge = kDegree + kDegreeSize;    // -2..+2
inline constexpr std::size_t kChargeSize = 5;
inline constexpr std::size_t kHydrogens = kCharge + kChargeSize;  // 0..4
inline constexpr std::size_t kHydrogensSize = 5;
inline constexpr std::size_t kHybrid = kHydrogens + kHydrogensSize;  // sp, sp2, sp3, other
inline constexpr std::size_t kHybridSize = 4;
inline constexpr std::size_t kAromatic = kHybrid + kHybridSize;
inline constexpr std::size_t kMass = kAromatic + 1;
inline constexpr std::size_t kWidth = kMass + 1;
}  // namespace atom_layout

/// Bond feature layout: single, double, triple, aromatic, in-ring, conjugated.
namespace bond_layout {
inline constexpr std::size_t kType = 0;
inline constexpr std::size_t kInRing = 4;
inline constexpr std::size_t kConjugated = 5;
inline constexpr std::size_t kWidth = 6;
}  // namespace bond_layout

enum class Hybridization : std::uint8_t { SP, SP2, SP3, Other };

/// sp2 for aromatic atoms or atoms with one double bond, sp for a triple
/// bond or two double bonds, sp3 for saturated atoms with at least one
/// neighbour or hydrogen, otherwise Other.
Hybridization hybridization(const Molecule& mol, int atom);

/// Conjugation flag per bond: aromatic bonds, plus single/multiple bonds
/// that alternate with another unsaturated bond through a shared atom.
std::vector<bool> conjugated_bonds(const Molecule& mol);

Matrix featurize_atoms(const Molecule& mol);
Matrix featurize_bonds(const Molecule& mol);

struct MolGraph {
  Matrix node_features;                      // n x atom_layout::kWidth
  std::vector<std::pair<int, int>> edges;    // undirected, first < second, bond order
  Matrix edge_features;                      // m x bond_layout::kWidth
  std::vector<std::uint8_t> adjacency;       // n x n row-major

  std::size_t num_nodes() const { return node_features.rows; }
  std::size_t num_edges() const { return edges.size(); }
  bool adjacent(std::size_t i, std::size_t j) const { return adjacency[i * num_nodes() + j] != 0; }
};

/// Throws EmptyMolecule when the molecule has no atoms.
MolGraph build_graph(const Molecule& mol);

}  // namespace tms
