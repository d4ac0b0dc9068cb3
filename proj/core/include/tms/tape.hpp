#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tms/matrix.hpp"

namespace tms {

/// A named trainable tensor that outlives any single tape.
class Parameter {
 public:
  Parameter(std::string name, Matrix value, bool trainable = true)
      : name_(std::move(name)), value(std::move(value)), grad(this->value.rows, this->value.cols), trainable(trainable) {}

  const std::string& name() const { return name_; }
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }

 private:
  std::string name_;

 public:
  Matrix value;
  Matrix grad;
  bool trainable;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  /// Value of a 1 x 1 node.
  double item() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so reverse insertion order is a
/// valid topological order for the backward sweep. One tape per thread.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to `p`. Repeated calls for the same parameter share a node.
  Var parameter(Parameter& p);

  /// Accumulates d(root)/d(p) into `grad` of every reachable trainable
  /// parameter. Throws NonScalarRoot unless root is 1 x 1.
  void backward(Var root);

  /// Gradient of the root with respect to `v` after backward(); zero-sized
  /// when nothing flowed into `v`.
  const Matrix& grad(Var v) const { return nodes_[v.id()].grad; }

  std::size_t size() const { return nodes_.size(); }
  void clear();

  // Used by op implementations.
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);
  const Matrix& value_of(std::size_t id) const { return nodes_[id].value; }
  /// Gradient buffer for node `id`, allocated as zeros on first use.
  Matrix& grad_of(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// Forward ops. Each checks shapes (ShapeMismatch) and records its backward
// rule. Only row-vector bias addition broadcasts.

Var matmul(Var a, Var b);
/// Elementwise sum; `b` may also be a 1 x cols row added to every row of `a`.
Var add(Var a, Var b);
Var subtract(Var a, Var b);
/// Hadamard product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Multiplies every entry of `a` by the 1 x 1 node `factor`.
Var scale(Var a, Var factor);
/// Multiplies row i of `a` by entry i of the column `factors`.
Var scale_rows(Var a, Var factors);
Var add_scalar(Var a, double c);
Var square(Var a);
Var relu(Var a);
Var sigmoid(Var a);
/// Throws DomainError for non-positive entries.
Var log(Var a);
Var exp(Var a);
Var softplus(Var a);
/// Throws DomainError for non-positive entries. Gradient is trigamma.
Var digamma(Var a);
Var sqrt(Var a);
Var reciprocal(Var a);

/// n x m -> n x 1.
Var row_sum(Var a);
/// -> 1 x 1.
Var sum(Var a);
/// -> 1 x 1; zero for an empty input.
Var mean(Var a);
/// -> 1 x 1.
Var frobenius_norm(Var a);
/// Numerically stable log(sum(exp(row))), n x m -> n x 1.
Var logsumexp_rows(Var a);

Var concat_cols(std::span<const Var> parts);
Var transpose(Var a);
Var slice_cols(Var a, std::size_t start, std::size_t count);
/// out[r] = a[index[r]].
Var gather_rows(Var a, std::span<const int> index);

/// Per-segment reductions over rows; `segment_ids` has one entry per row of
/// `values`, each in [0, num_segments). Empty segments produce zero rows.
Var segment_sum(Var values, std::span<const int> segment_ids, std::size_t num_segments);
Var segment_mean(Var values, std::span<const int> segment_ids, std::size_t num_segments);
/// Column-wise max; the gradient goes to the first maximal row.
Var segment_max(Var values, std::span<const int> segment_ids, std::size_t num_segments);

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  /// Applies one update to every trainable parameter from its `grad`.
  void step(std::span<Parameter* const> params);

  long steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };

  AdamOptions options_;
  long t_ = 0;
  std::unordered_map<std::string, Moments> state_;
};

}  // namespace tms
