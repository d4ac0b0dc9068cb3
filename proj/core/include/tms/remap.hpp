#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tms/featurize.hpp"
#include "tms/matrix.hpp"

namespace tms {

/// Bond-centric view of a molecular graph: one node per bond, one edge per
/// pair of bonds sharing an atom.
struct BondGraph {
  /// Row b is v_i ⊕ e_b ⊕ v_j for bond b between atoms i and j, with the
  /// lexicographically smaller feature row first.
  Matrix node_inputs;
  /// Row r is e_a ⊕ v_j ⊕ e_b for bonds a and b sharing atom j, again with
  /// the smaller feature row first.
  Matrix edge_inputs;
  /// Bond-node index pairs, first < second, sorted lexicographically.
  std::vector<std::pair<int, int>> edges;
  std::vector<std::uint8_t> adjacency;  // m x m row-major
  std::vector<std::pair<int, int>> node_origin;  // atom pair for each bond-node
  std::vector<int> edge_mediator;                // shared atom for each edge

  std::size_t num_nodes() const { return node_origin.size(); }
  std::size_t num_edges() const { return edges.size(); }
  bool adjacent(std::size_t a, std::size_t b) const { return adjacency[a * num_nodes() + b] != 0; }
};

BondGraph remap_topology(const MolGraph& g);

/// Line-graph adjacency by checking every pair of edges for a shared
/// endpoint. Independent of remap_topology; intended for tests.
std::vector<std::uint8_t> line_graph_oracle(const MolGraph& g);

}  // namespace tms
