#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tms/featurize.hpp"
#include "tms/remap.hpp"
#include "tms/rng.hpp"
#include "tms/tape.hpp"

namespace tms {

struct EncoderConfig {
  int num_gin_layers = 3;   // K
  int hidden_dim = 64;      // d
  int mlp_layers = 2;       // linear layers per GIN MLP
  double epsilon_init = 0.0;
  double scaling_factor = 1e-6;  // s in the anti-smoothing normalization
  int projection_dim = 64;
  bool normalize = true;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// y = x W + b with W of shape in x out.
class Linear {
 public:
  Linear(std::string name, std::size_t in, std::size_t out, Rng& rng, double init_gain = 1.0);

  Var operator()(Tape& tape, Var x);
  std::size_t in_dim() const { return weight_->value.rows; }
  std::size_t out_dim() const { return weight_->value.cols; }
  Parameter& weight() { return *weight_; }
  Parameter& bias() { return *bias_; }
  void collect(std::vector<Parameter*>& out) {
    out.push_back(weight_.get());
    out.push_back(bias_.get());
  }

 private:
  // Heap-allocated so Parameter addresses stay stable when layers move.
  std::unique_ptr<Parameter> weight_;
  std::unique_ptr<Parameter> bias_;
};

/// Stack of linear layers with ReLU between them; `relu_out` adds a final ReLU.
class Mlp {
 public:
  Mlp(const std::string& name, std::span<const std::size_t> dims, Rng& rng, bool relu_out = false,
      double first_gain = 1.0);

  Var operator()(Tape& tape, Var x);
  void collect(std::vector<Parameter*>& out) {
    for (auto& l : layers_) l.collect(out);
  }
  std::vector<Linear>& layers() { return layers_; }

 private:
  std::vector<Linear> layers_;
  bool relu_out_;
};

/// Disjoint union of graphs from one view. Messages are directed; every
/// undirected edge contributes one message per direction.
struct GraphBatch {
  Matrix node_inputs;
  std::vector<int> node_graph;
  std::vector<int> msg_src;
  std::vector<int> msg_dst;
  /// Undirected edge index of each message; indexes rows of edge_inputs.
  std::vector<int> msg_edge;
  Matrix edge_inputs;
  std::vector<std::size_t> graph_sizes;
  std::size_t num_graphs = 0;

  std::size_t num_nodes() const { return node_graph.size(); }
};

GraphBatch batch_molecular(std::span<const MolGraph* const> graphs);
GraphBatch batch_bond(std::span<const BondGraph* const> graphs);

/// (1 + eps) h_i + sum over messages j -> i of (h_j + edge_messages_m).
/// `eps` is a 1 x 1 node; `edge_messages` has one row per message.
Var gin_aggregate(Var h, std::span<const int> msg_src, std::span<const int> msg_dst, Var eps,
                  std::optional<Var> edge_messages = std::nullopt);

/// Per-graph centering followed by rescaling each graph's block to
/// Frobenius norm s * sqrt(|V|). A 1e-12 guard is added to the norm, so a
/// constant block maps to zeros.
Var anti_smoothing_normalize(Var h, std::span<const int> node_graph, std::size_t num_graphs, double s);

/// Column-wise max followed by column-wise mean, per graph. Graphs with no
/// nodes read out as zeros.
Var readout(Var h, std::span<const int> node_graph, std::size_t num_graphs);

enum class ViewKind { Molecular, Bond };

struct EncodedView {
  Var h0;        // input projection
  Var per_node;  // final layer, normalized when enabled
  Var z;         // num_graphs x 2d
  Var p;         // num_graphs x projection_dim
};

/// One GIN encoder plus projection head.
class ViewEncoder {
 public:
  ViewEncoder(ViewKind kind, const EncoderConfig& config, std::size_t node_in, std::size_t edge_in, Rng& rng);

  /// Molecular view: Linear + ReLU. Bond view: two-layer node MLP.
  Var input_projection(Tape& tape, const GraphBatch& batch);
  /// Bond view only: edge MLP output, one row per message.
  std::optional<Var> edge_messages(Tape& tape, const GraphBatch& batch);
  Var gin_layer(Tape& tape, std::size_t k, Var h, const GraphBatch& batch, std::optional<Var> edge_msgs);
  Var project(Tape& tape, Var z);

  EncodedView encode(Tape& tape, const GraphBatch& batch);

  void collect(std::vector<Parameter*>& out);
  ViewKind kind() const { return kind_; }

 private:
  ViewKind kind_;
  EncoderConfig config_;
  std::optional<Linear> atom_proj_;
  std::optional<Mlp> node_mlp_;
  std::optional<Mlp> edge_mlp_;
  std::vector<std::unique_ptr<Parameter>> eps_;
  std::vector<Mlp> gin_mlps_;
  std::optional<Mlp> projection_;
};

}  // namespace tms
