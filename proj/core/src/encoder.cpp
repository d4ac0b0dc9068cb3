#include "tms/encoder.hpp"

#include <cmath>

#include "tms/error.hpp"

namespace tms {

void EncoderConfig::validate() const {
  if (num_gin_layers < 1) throw Error(Errc::ConfigError, "num_gin_layers must be >= 1");
  if (hidden_dim < 1) throw Error(Errc::ConfigError, "hidden_dim must be >= 1");
  if (mlp_layers < 1) throw Error(Errc::ConfigError, "mlp_layers must be >= 1");
  if (projection_dim < 1) throw Error(Errc::ConfigError, "projection_dim must be >= 1");
  if (!(scaling_factor > 0.0)) throw Error(Errc::ConfigError, "scaling_factor must be > 0");
}

Linear::Linear(std::string name, std::size_t in, std::size_t out, Rng& rng, double init_gain) {
  const double bound = init_gain / std::sqrt(static_cast<double>(in));
  Matrix w(in, out);
  for (double& x : w.data) x = rng.uniform(-bound, bound);
  Matrix b(1, out);
  // Bias drawn at the un-scaled bound so a large gain does not blow it up.
  const double bias_bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& x : b.data) x = rng.uniform(-bias_bound, bias_bound);
  weight_ = std::make_unique<Parameter>(name + ".weight", std::move(w));
  bias_ = std::make_unique<Parameter>(name + ".bias", std::move(b));
}

Var Linear::operator()(Tape& tape, Var x) {
  return add(matmul(x, tape.parameter(*weight_)), tape.parameter(*bias_));
}

Mlp::Mlp(const std::string& name, std::span<const std::size_t> dims, Rng& rng, bool relu_out, double first_gain)
    : relu_out_(relu_out) {
  if (dims.size() < 2) throw Error(Errc::ConfigError, "Mlp needs at least two dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(name + "." + std::to_string(i), dims[i], dims[i + 1], rng, i == 0 ? first_gain : 1.0);
  }
}

Var Mlp::operator()(Tape& tape, Var x) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i](tape, x);
    if (i + 1 < layers_.size() || relu_out_) x = relu(x);
  }
  return x;
}

namespace {

template <typename Graph, typename NodeFn, typename EdgeFn>
GraphBatch batch_impl(std::span<const Graph* const> graphs, std::size_t node_dim, std::size_t edge_dim,
                      NodeFn nodes_of, EdgeFn edges_of) {
  GraphBatch b;
  b.num_graphs = graphs.size();
  std::size_t total_nodes = 0, total_edges = 0;
  for (const Graph* g : graphs) {
    total_nodes += nodes_of(*g).rows;
    total_edges += edges_of(*g).size();
  }
  b.node_inputs = Matrix(total_nodes, node_dim);
  b.edge_inputs = Matrix(total_edges, edge_dim);
  std::size_t node_off = 0, edge_off = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = *graphs[gi];
    const Matrix& x = nodes_of(g);
    if (x.rows > 0 && x.cols != node_dim) throw Error(Errc::ShapeMismatch, "node feature width differs in batch");
    std::copy(x.data.begin(), x.data.end(), b.node_inputs.data.begin() + static_cast<long>(node_off * node_dim));
    for (std::size_t i = 0; i < x.rows; ++i) b.node_graph.push_back(static_cast<int>(gi));
    b.graph_sizes.push_back(x.rows);
    const auto& edges = edges_of(g);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const int u = static_cast<int>(node_off) + edges[e].first;
      const int v = static_cast<int>(node_off) + edges[e].second;
      const int eid = static_cast<int>(edge_off + e);
      b.msg_src.insert(b.msg_src.end(), {u, v});
      b.msg_dst.insert(b.msg_dst.end(), {v, u});
      b.msg_edge.insert(b.msg_edge.end(), {eid, eid});
    }
    node_off += x.rows;
    edge_off += edges.size();
  }
  return b;
}

}  // namespace

GraphBatch batch_molecular(std::span<const MolGraph* const> graphs) {
  GraphBatch b = batch_impl(
      graphs, atom_layout::kWidth, 0, [](const MolGraph& g) -> const Matrix& { return g.node_features; },
      [](const MolGraph& g) -> const auto& { return g.edges; });
  b.edge_inputs = Matrix(b.edge_inputs.rows, 0);
  return b;
}

GraphBatch batch_bond(std::span<const BondGraph* const> graphs) {
  constexpr std::size_t node_dim = 2 * atom_layout::kWidth + bond_layout::kWidth;
  constexpr std::size_t edge_dim = 2 * bond_layout::kWidth + atom_layout::kWidth;
  GraphBatch b = batch_impl(
      graphs, node_dim, edge_dim, [](const BondGraph& g) -> const Matrix& { return g.node_inputs; },
      [](const BondGraph& g) -> const auto& { return g.edges; });
  std::size_t row = 0;
  for (const BondGraph* g : graphs) {
    if (g->edge_inputs.rows > 0 && g->edge_inputs.cols != edge_dim) {
      throw Error(Errc::ShapeMismatch, "bond edge feature width differs in batch");
    }
    std::copy(g->edge_inputs.data.begin(), g->edge_inputs.data.end(),
              b.edge_inputs.data.begin() + static_cast<long>(row * edge_dim));
    row += g->edge_inputs.rows;
  }
  return b;
}

Var gin_aggregate(Var h, std::span<const int> msg_src, std::span<const int> msg_dst, Var eps,
                  std::optional<Var> edge_messages) {
  Var self = add(h, scale(h, eps));
  if (msg_src.empty()) return self;
  Var msgs = gather_rows(h, msg_src);
  if (edge_messages) msgs = add(msgs, *edge_messages);
  return add(self, segment_sum(msgs, msg_dst, h.rows()));
}

Var anti_smoothing_normalize(Var h, std::span<const int> node_graph, std::size_t num_graphs, double s) {
  Tape& tape = *h.tape();
  if (h.rows() == 0) return h;
  Var centered = subtract(h, gather_rows(segment_mean(h, node_graph, num_graphs), node_graph));
  Var sq = segment_sum(row_sum(square(centered)), node_graph, num_graphs);
  Var norm = add_scalar(sqrt(sq), 1e-12);
  Matrix target(num_graphs, 1);
  for (int g : node_graph) target.data[g] += 1.0;
  for (double& x : target.data) x = s * std::sqrt(x);
  Var factor = mul(tape.constant(std::move(target)), reciprocal(norm));
  return scale_rows(centered, gather_rows(factor, node_graph));
}

Var readout(Var h, std::span<const int> node_graph, std::size_t num_graphs) {
  const Var parts[] = {segment_max(h, node_graph, num_graphs), segment_mean(h, node_graph, num_graphs)};
  return concat_cols(parts);
}

ViewEncoder::ViewEncoder(ViewKind kind, const EncoderConfig& config, std::size_t node_in, std::size_t edge_in,
                         Rng& rng)
    : kind_(kind), config_(config) {
  config_.validate();
  const auto d = static_cast<std::size_t>(config.hidden_dim);
  const std::string prefix = kind == ViewKind::Molecular ? "mol" : "bond";
  if (kind == ViewKind::Molecular) {
    atom_proj_.emplace(prefix + ".input", node_in, d, rng);
  } else {
    const std::size_t node_dims[] = {node_in, d, d};
    node_mlp_.emplace(prefix + ".f_node", node_dims, rng, true);
    const std::size_t edge_dims[] = {edge_in, d, d};
    edge_mlp_.emplace(prefix + ".f_edge", edge_dims, rng, true);
  }
  std::vector<std::size_t> gin_dims(static_cast<std::size_t>(config.mlp_layers) + 1, d);
  for (int k = 0; k < config.num_gin_layers; ++k) {
    const std::string name = prefix + ".gin" + std::to_string(k);
    eps_.push_back(std::make_unique<Parameter>(name + ".eps", Matrix::scalar(config.epsilon_init)));
    gin_mlps_.emplace_back(name + ".mlp", gin_dims, rng);
  }
  // Normalized features have magnitude ~s, so the first projection layer
  // starts at a matching 1/s gain.
  const double gain = config.normalize ? 1.0 / config.scaling_factor : 1.0;
  const std::size_t proj_dims[] = {2 * d, d, static_cast<std::size_t>(config.projection_dim)};
  projection_.emplace(prefix + ".projection", proj_dims, rng, false, gain);
}

Var ViewEncoder::input_projection(Tape& tape, const GraphBatch& batch) {
  Var x = tape.constant(batch.node_inputs);
  if (atom_proj_) return relu((*atom_proj_)(tape, x));
  return (*node_mlp_)(tape, x);
}

std::optional<Var> ViewEncoder::edge_messages(Tape& tape, const GraphBatch& batch) {
  if (!edge_mlp_ || batch.msg_edge.empty()) return std::nullopt;
  Var e = (*edge_mlp_)(tape, tape.constant(batch.edge_inputs));
  return gather_rows(e, batch.msg_edge);
}

Var ViewEncoder::gin_layer(Tape& tape, std::size_t k, Var h, const GraphBatch& batch,
                           std::optional<Var> edge_msgs) {
  Var agg = gin_aggregate(h, batch.msg_src, batch.msg_dst, tape.parameter(*eps_.at(k)), edge_msgs);
  return gin_mlps_[k](tape, agg);
}

Var ViewEncoder::project(Tape& tape, Var z) { return (*projection_)(tape, z); }

EncodedView ViewEncoder::encode(Tape& tape, const GraphBatch& batch) {
  EncodedView out;
  out.h0 = input_projection(tape, batch);
  const auto edge_msgs = edge_messages(tape, batch);
  Var h = out.h0;
  for (std::size_t k = 0; k < gin_mlps_.size(); ++k) {
    h = gin_layer(tape, k, h, batch, edge_msgs);
    if (k + 1 < gin_mlps_.size()) h = relu(h);
  }
  if (config_.normalize) h = anti_smoothing_normalize(h, batch.node_graph, batch.num_graphs, config_.scaling_factor);
  out.per_node = h;
  out.z = readout(h, batch.node_graph, batch.num_graphs);
  out.p = project(tape, out.z);
  return out;
}

void ViewEncoder::collect(std::vector<Parameter*>& out) {
  if (atom_proj_) atom_proj_->collect(out);
  if (node_mlp_) node_mlp_->collect(out);
  if (edge_mlp_) edge_mlp_->collect(out);
  for (std::size_t k = 0; k < gin_mlps_.size(); ++k) {
    out.push_back(eps_[k].get());
    gin_mlps_[k].collect(out);
  }
  projection_->collect(out);
}

}  // namespace tms
