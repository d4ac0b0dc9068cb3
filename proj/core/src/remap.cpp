#include "tms/remap.hpp"

#include <algorithm>
#include <tuple>

namespace tms {
namespace {

void append(std::span<double> dst, std::size_t& off, std::span<const double> src) {
  std::copy(src.begin(), src.end(), dst.begin() + static_cast<long>(off));
  off += src.size();
}

// Concatenations are order-sensitive, so ends are ordered by their feature
// rows rather than by index; relabeling atoms then leaves every row unchanged.
// Equal rows give the same concatenation either way.
bool row_less(const Matrix& m, std::size_t a, std::size_t b) {
  const auto x = m.row_span(a), y = m.row_span(b);
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

}  // namespace

BondGraph remap_topology(const MolGraph& g) {
  const std::size_t m = g.num_edges();
  const std::size_t dv = g.node_features.cols;
  const std::size_t de = g.edge_features.cols;
  BondGraph r;
  r.node_inputs = Matrix(m, 2 * dv + de);
  r.node_origin.reserve(m);
  for (std::size_t b = 0; b < m; ++b) {
    const auto [i, j] = g.edges[b];
    const int lo = std::min(i, j), hi = std::max(i, j);
    r.node_origin.emplace_back(lo, hi);
    std::size_t off = 0;
    auto row = r.node_inputs.row_span(b);
    const bool flip = row_less(g.node_features, hi, lo);
    append(row, off, g.node_features.row_span(flip ? hi : lo));
    append(row, off, g.edge_features.row_span(b));
    append(row, off, g.node_features.row_span(flip ? lo : hi));
  }

  std::vector<std::vector<int>> incident(g.num_nodes());
  for (std::size_t b = 0; b < m; ++b) {
    incident[g.edges[b].first].push_back(static_cast<int>(b));
    incident[g.edges[b].second].push_back(static_cast<int>(b));
  }
  std::vector<std::tuple<int, int, int>> pairs;  // (a, b, shared atom)
  for (std::size_t atom = 0; atom < incident.size(); ++atom) {
    const auto& list = incident[atom];
    for (std::size_t x = 0; x < list.size(); ++x) {
      for (std::size_t y = x + 1; y < list.size(); ++y) {
        pairs.emplace_back(std::min(list[x], list[y]), std::max(list[x], list[y]), static_cast<int>(atom));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());

  r.adjacency.assign(m * m, 0);
  r.edge_inputs = Matrix(pairs.size(), 2 * de + dv);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b, j] = pairs[k];
    r.edges.emplace_back(a, b);
    r.edge_mediator.push_back(j);
    r.adjacency[a * m + b] = 1;
    r.adjacency[b * m + a] = 1;
    std::size_t off = 0;
    auto row = r.edge_inputs.row_span(k);
    const bool flip = row_less(g.edge_features, b, a);
    append(row, off, g.edge_features.row_span(flip ? b : a));
    append(row, off, g.node_features.row_span(j));
    append(row, off, g.edge_features.row_span(flip ? a : b));
  }
  return r;
}

std::vector<std::uint8_t> line_graph_oracle(const MolGraph& g) {
  const std::size_t m = g.num_edges();
  std::vector<std::uint8_t> adj(m * m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      const auto [p, q] = g.edges[a];
      const auto [s, t] = g.edges[b];
      const int shared = (p == s) + (p == t) + (q == s) + (q == t);
      if (shared == 1) adj[a * m + b] = 1;
    }
  }
  return adj;
}

}  // namespace tms
