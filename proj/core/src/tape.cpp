#include "tms/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tms/error.hpp"
#include "tms/special.hpp"

namespace tms {

const Matrix& Var::value() const { return tape_->value_of(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw Error(Errc::ShapeMismatch, "item() on " + v.shape_string());
  return v.data[0];
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.value = p.value;
  node.param = &p;
  node.needs_grad = p.trainable;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw Error(Errc::ShapeMismatch, "operand recorded on a different tape");
    node.needs_grad = node.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_of(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.size() != node.value.size() || !node.grad.same_shape(node.value)) {
    node.grad = Matrix(node.value.rows, node.value.cols);
  }
  return node.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw Error(Errc::NonScalarRoot, "root belongs to another tape");
  const Matrix& rv = value_of(root.id());
  if (rv.rows != 1 || rv.cols != 1) throw Error(Errc::NonScalarRoot, "root has shape " + rv.shape_string());
  for (auto& node : nodes_) node.grad = Matrix();
  grad_of(root.id()).data[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad || node.grad.empty()) continue;
    if (node.backward) {
      // Copy: the callback may allocate gradients of other nodes.
      const Matrix g = node.grad;
      node.backward(*this, g);
    }
    if (node.param != nullptr && node.param->trainable) {
      auto& dst = node.param->grad.data;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += node.grad.data[k];
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

namespace {

Tape& tape_of(Var a) { return *a.tape(); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw Error(Errc::ShapeMismatch, std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  Matrix out(av.rows, av.cols);
  for (std::size_t k = 0; k < av.size(); ++k) out.data[k] = fwd(av.data[k]);
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return t.record(std::move(out), inputs, [ai, deriv](Tape& tp, const Matrix& g) {
    if (!tp.needs_grad(ai)) return;
    const Matrix& x = tp.value_of(ai);
    Matrix& ga = tp.grad_of(ai);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * deriv(x.data[k]);
  });
}

void require_positive(const Matrix& m, const char* op) {
  for (double x : m.data) {
    // NaN passes through so callers can report which loss went non-finite.
    if (x <= 0.0) throw Error(Errc::DomainError, std::string(op) + " of non-positive value " + std::to_string(x));
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols != bv.rows) {
    throw Error(Errc::ShapeMismatch, "matmul: " + av.shape_string() + " x " + bv.shape_string());
  }
  Matrix out(av.rows, bv.cols);
  for (std::size_t i = 0; i < av.rows; ++i) {
    double* orow = out.data.data() + i * out.cols;
    for (std::size_t k = 0; k < av.cols; ++k) {
      const double aik = av(i, k);
      if (aik == 0.0) continue;
      const double* brow = bv.data.data() + k * bv.cols;
      for (std::size_t j = 0; j < bv.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  const std::size_t ai = a.id(), bi = b.id();
  const Var inputs[] = {a, b};
  return tape_of(a).record(std::move(out), inputs, [ai, bi](Tape& t, const Matrix& g) {
    const Matrix& A = t.value_of(ai);
    const Matrix& B = t.value_of(bi);
    if (t.needs_grad(ai)) {
      Matrix& ga = t.grad_of(ai);  // g * B^T
      for (std::size_t i = 0; i < g.rows; ++i) {
        for (std::size_t k = 0; k < B.rows; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < g.cols; ++j) acc += g(i, j) * B(k, j);
          ga(i, k) += acc;
        }
      }
    }
    if (t.needs_grad(bi)) {
      Matrix& gb = t.grad_of(bi);  // A^T * g
      for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t k = 0; k < A.cols; ++k) {
          const double aik = A(i, k);
          if (aik == 0.0) continue;
          for (std::size_t j = 0; j < g.cols; ++j) gb(k, j) += aik * g(i, j);
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const bool bias = !av.same_shape(bv) && bv.rows == 1 && bv.cols == av.cols;
  if (!bias) require_same_shape(av, bv, "add");
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += bias ? bv(0, j) : bv(i, j);
  }
  const std::size_t ai = a.id(), bi = b.id();
  const Var inputs[] = {a, b};
  return tape_of(a).record(std::move(out), inputs, [ai, bi, bias](Tape& t, const Matrix& g) {
    if (t.needs_grad(ai)) {
      Matrix& ga = t.grad_of(ai);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
    }
    if (t.needs_grad(bi)) {
      Matrix& gb = t.grad_of(bi);
      for (std::size_t i = 0; i < g.rows; ++i) {
        for (std::size_t j = 0; j < g.cols; ++j) gb(bias ? 0 : i, j) += g(i, j);
      }
    }
  });
}

Var subtract(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "subtract");
  Matrix out = av;
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] -= bv.data[k];
  const std::size_t ai = a.id(), bi = b.id();
  const Var inputs[] = {a, b};
  return tape_of(a).record(std::move(out), inputs, [ai, bi](Tape& t, const Matrix& g) {
    if (t.needs_grad(ai)) {
      Matrix& ga = t.grad_of(ai);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
    }
    if (t.needs_grad(bi)) {
      Matrix& gb = t.grad_of(bi);
      for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] -= g.data[k];
    }
  });
}

Var mul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "mul");
  Matrix out = av;
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] *= bv.data[k];
  const std::size_t ai = a.id(), bi = b.id();
  const Var inputs[] = {a, b};
  return tape_of(a).record(std::move(out), inputs, [ai, bi](Tape& t, const Matrix& g) {
    const Matrix& A = t.value_of(ai);
    const Matrix& B = t.value_of(bi);
    if (t.needs_grad(ai)) {
      Matrix& ga = t.grad_of(ai);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * B.data[k];
    }
    if (t.needs_grad(bi)) {
      Matrix& gb = t.grad_of(bi);
      for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] += g.data[k] * A.data[k];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double) { return factor; });
}

Var scale(Var a, Var factor) {
  const Matrix& av = a.value();
  const Matrix& fv = factor.value();
  if (fv.size() != 1) throw Error(Errc::ShapeMismatch, "scale: factor has shape " + fv.shape_string());
  const double f = fv.data[0];
  Matrix out = av;
  for (double& x : out.data) x *= f;
  const std::size_t ai = a.id(), fi = factor.id();
  const Var inputs[] = {a, factor};
  return tape_of(a).record(std::move(out), inputs, [ai, fi](Tape& t, const Matrix& g) {
    const Matrix& A = t.value_of(ai);
    const double f = t.value_of(fi).data[0];
    if (t.needs_grad(ai)) {
      Matrix& ga = t.grad_of(ai);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * f;
    }
    if (t.needs_grad(fi)) {
      double acc = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) acc += g.data[k] * A.data[k];
      t.grad_of(fi).data[0] += acc;
    }
  });
}

Var scale_rows(Var a, Var factors) {
  const Matrix& av = a.value();
  const Matrix& fv = factors.value();
  if (fv.cols != 1 || fv.rows != av.rows) {
    throw Error(Errc::ShapeMismatch, "scale_rows: " + av.shape_string() + " by " + fv.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (double& x : out.row_span(i)) x *= fv.data[i];
  }
  const std::size_t ai = a.id(), fi = factors.id();
  const Var inputs[] = {a, factors};
  return tape_of(a).record(std::move(out), inputs, [ai, fi](Tape& t, const Matrix& g) {
    const Matrix& A = t.value_of(ai);
    const Matrix& F = t.value_of(fi);
    if (t.needs_grad(ai)) {
      Matrix& ga = t.grad_of(ai);
      for (std::size_t i = 0; i < g.rows; ++i) {
        for (std::size_t j = 0; j < g.cols; ++j) ga(i, j) += g(i, j) * F.data[i];
      }
    }
    if (t.needs_grad(fi)) {
      Matrix& gf = t.grad_of(fi);
      for (std::size_t i = 0; i < g.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < g.cols; ++j) acc += g(i, j) * A(i, j);
        gf.data[i] += acc;
      }
    }
  });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a, sigmoid_scalar, [](double x) {
    const double s = sigmoid_scalar(x);
    return s * (1.0 - s);
  });
}

Var log(Var a) {
  require_positive(a.value(), "log");
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }, sigmoid_scalar);
}

Var digamma(Var a) {
  require_positive(a.value(), "digamma");
  return unary(a, [](double x) { return tms::digamma(x); }, [](double x) { return tms::trigamma(x); });
}

Var sqrt(Var a) {
  for (double x : a.value().data) {
    if (x < 0.0) throw Error(Errc::DomainError, "sqrt of negative value " + std::to_string(x));
  }
  // The derivative at 0 is taken as 0 so an all-zero input stays finite.
  return unary(a, [](double x) { return std::sqrt(x); },
               [](double x) { return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0; });
}

Var reciprocal(Var a) {
  for (double x : a.value().data) {
    if (x == 0.0) throw Error(Errc::DomainError, "reciprocal of zero");
  }
  return unary(a, [](double x) { return 1.0 / x; }, [](double x) { return -1.0 / (x * x); });
}

Var row_sum(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.rows, 1);
  for (std::size_t i = 0; i < av.rows; ++i) {
    double acc = 0.0;
    for (double x : av.row_span(i)) acc += x;
    out.data[i] = acc;
  }
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return tape_of(a).record(std::move(out), inputs, [ai](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_of(ai);
    for (std::size_t i = 0; i < ga.rows; ++i) {
      for (double& x : ga.row_span(i)) x += g.data[i];
    }
  });
}

Var sum(Var a) {
  const Matrix& av = a.value();
  double acc = 0.0;
  for (double x : av.data) acc += x;
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return tape_of(a).record(Matrix::scalar(acc), inputs, [ai](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_of(ai);
    for (double& x : ga.data) x += g.data[0];
  });
}

Var mean(Var a) {
  const Matrix& av = a.value();
  const double n = static_cast<double>(av.size());
  if (av.empty()) return tape_of(a).constant(Matrix::scalar(0.0));
  double acc = 0.0;
  for (double x : av.data) acc += x;
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return tape_of(a).record(Matrix::scalar(acc / n), inputs, [ai, n](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_of(ai);
    for (double& x : ga.data) x += g.data[0] / n;
  });
}

Var frobenius_norm(Var a) {
  const Matrix& av = a.value();
  double acc = 0.0;
  for (double x : av.data) acc += x * x;
  const double norm = std::sqrt(acc);
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return tape_of(a).record(Matrix::scalar(norm), inputs, [ai, norm](Tape& t, const Matrix& g) {
    if (norm == 0.0) return;
    const Matrix& A = t.value_of(ai);
    Matrix& ga = t.grad_of(ai);
    for (std::size_t k = 0; k < A.size(); ++k) ga.data[k] += g.data[0] * A.data[k] / norm;
  });
}

Var logsumexp_rows(Var a) {
  const Matrix& av = a.value();
  if (av.cols == 0) throw Error(Errc::ShapeMismatch, "logsumexp_rows on zero columns");
  Matrix out(av.rows, 1);
  for (std::size_t i = 0; i < av.rows; ++i) {
    const auto row = av.row_span(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double acc = 0.0;
    for (double x : row) acc += std::exp(x - mx);
    out.data[i] = mx + std::log(acc);
  }
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return tape_of(a).record(std::move(out), inputs, [ai](Tape& t, const Matrix& g) {
    // d lse / d a_ij = softmax(row i)_j
    const Matrix& A = t.value_of(ai);
    Matrix& ga = t.grad_of(ai);
    for (std::size_t i = 0; i < A.rows; ++i) {
      const auto row = A.row_span(i);
      const double mx = *std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (double x : row) z += std::exp(x - mx);
      for (std::size_t j = 0; j < A.cols; ++j) ga(i, j) += g.data[i] * std::exp(row[j] - mx) / z;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error(Errc::ShapeMismatch, "concat_cols of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw Error(Errc::ShapeMismatch, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(pv.row_span(i).begin(), pv.row_span(i).end(), out.row_span(i).begin() + static_cast<long>(off));
    }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += pv.cols;
  }
  return tape_of(parts[0]).record(std::move(out), parts, [ids, offsets](Tape& t, const Matrix& g) {
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (!t.needs_grad(ids[p])) continue;
      Matrix& gp = t.grad_of(ids[p]);
      for (std::size_t i = 0; i < gp.rows; ++i) {
        for (std::size_t j = 0; j < gp.cols; ++j) gp(i, j) += g(i, offsets[p] + j);
      }
    }
  });
}

Var transpose(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.cols, av.rows);
  for (std::size_t i = 0; i < av.rows; ++i) {
    for (std::size_t j = 0; j < av.cols; ++j) out(j, i) = av(i, j);
  }
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return tape_of(a).record(std::move(out), inputs, [ai](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_of(ai);
    for (std::size_t i = 0; i < ga.rows; ++i) {
      for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) += g(j, i);
    }
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const Matrix& av = a.value();
  if (start + count > av.cols) throw Error(Errc::ShapeMismatch, "slice_cols out of range");
  Matrix out(av.rows, count);
  for (std::size_t i = 0; i < av.rows; ++i) {
    for (std::size_t j = 0; j < count; ++j) out(i, j) = av(i, start + j);
  }
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return tape_of(a).record(std::move(out), inputs, [ai, start](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_of(ai);
    for (std::size_t i = 0; i < g.rows; ++i) {
      for (std::size_t j = 0; j < g.cols; ++j) ga(i, start + j) += g(i, j);
    }
  });
}

Var gather_rows(Var a, std::span<const int> index) {
  const Matrix& av = a.value();
  Matrix out(index.size(), av.cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || static_cast<std::size_t>(index[r]) >= av.rows) {
      throw Error(Errc::ShapeMismatch, "gather_rows index " + std::to_string(index[r]) + " out of range");
    }
    std::copy(av.row_span(index[r]).begin(), av.row_span(index[r]).end(), out.row_span(r).begin());
  }
  const std::size_t ai = a.id();
  const Var inputs[] = {a};
  return tape_of(a).record(std::move(out), inputs,
                           [ai, idx = std::vector<int>(index.begin(), index.end())](Tape& t, const Matrix& g) {
                             Matrix& ga = t.grad_of(ai);
                             for (std::size_t r = 0; r < idx.size(); ++r) {
                               auto dst = ga.row_span(idx[r]);
                               auto src = g.row_span(r);
                               for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                             }
                           });
}

namespace {

void check_segments(const Matrix& v, std::span<const int> ids, std::size_t n, const char* op) {
  if (ids.size() != v.rows) {
    throw Error(Errc::ShapeMismatch, std::string(op) + ": " + std::to_string(ids.size()) + " ids for " +
                                         std::to_string(v.rows) + " rows");
  }
  for (int s : ids) {
    if (s < 0 || static_cast<std::size_t>(s) >= n) {
      throw Error(Errc::ShapeMismatch, std::string(op) + ": segment id " + std::to_string(s) + " out of range");
    }
  }
}

Var segment_reduce_linear(Var values, std::span<const int> ids, std::size_t n, bool average) {
  const Matrix& v = values.value();
  check_segments(v, ids, n, average ? "segment_mean" : "segment_sum");
  std::vector<double> weight(v.rows, 1.0);
  if (average) {
    std::vector<double> count(n, 0.0);
    for (int s : ids) count[s] += 1.0;
    for (std::size_t r = 0; r < v.rows; ++r) weight[r] = 1.0 / count[ids[r]];
  }
  Matrix out(n, v.cols);
  for (std::size_t r = 0; r < v.rows; ++r) {
    auto dst = out.row_span(ids[r]);
    auto src = v.row_span(r);
    for (std::size_t j = 0; j < v.cols; ++j) dst[j] += weight[r] * src[j];
  }
  const std::size_t vi = values.id();
  const Var inputs[] = {values};
  return tape_of(values).record(
      std::move(out), inputs,
      [vi, seg = std::vector<int>(ids.begin(), ids.end()), weight](Tape& t, const Matrix& g) {
        Matrix& gv = t.grad_of(vi);
        for (std::size_t r = 0; r < seg.size(); ++r) {
          auto dst = gv.row_span(r);
          auto src = g.row_span(seg[r]);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += weight[r] * src[j];
        }
      });
}

}  // namespace

Var segment_sum(Var values, std::span<const int> segment_ids, std::size_t num_segments) {
  return segment_reduce_linear(values, segment_ids, num_segments, false);
}

Var segment_mean(Var values, std::span<const int> segment_ids, std::size_t num_segments) {
  return segment_reduce_linear(values, segment_ids, num_segments, true);
}

Var segment_max(Var values, std::span<const int> segment_ids, std::size_t num_segments) {
  const Matrix& v = values.value();
  check_segments(v, segment_ids, num_segments, "segment_max");
  Matrix out(num_segments, v.cols);
  std::vector<long> argmax(num_segments * v.cols, -1);
  for (std::size_t r = 0; r < v.rows; ++r) {
    const auto s = static_cast<std::size_t>(segment_ids[r]);
    for (std::size_t j = 0; j < v.cols; ++j) {
      long& best = argmax[s * v.cols + j];
      if (best < 0 || v(r, j) > out(s, j)) {
        best = static_cast<long>(r);
        out(s, j) = v(r, j);
      }
    }
  }
  const std::size_t vi = values.id();
  const std::size_t cols = v.cols;
  const Var inputs[] = {values};
  return tape_of(values).record(std::move(out), inputs, [vi, argmax, cols](Tape& t, const Matrix& g) {
    Matrix& gv = t.grad_of(vi);
    for (std::size_t k = 0; k < argmax.size(); ++k) {
      if (argmax[k] >= 0) gv(static_cast<std::size_t>(argmax[k]), k % cols) += g.data[k];
    }
  });
}

void Adam::step(std::span<Parameter* const> params) {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    auto& st = state_[p->name()];
    if (st.m.size() != p->value.size()) {
      st.m.assign(p->value.size(), 0.0);
      st.v.assign(p->value.size(), 0.0);
    }
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      const double g = p->grad.data[k];
      st.m[k] = options_.beta1 * st.m[k] + (1.0 - options_.beta1) * g;
      st.v[k] = options_.beta2 * st.v[k] + (1.0 - options_.beta2) * g * g;
      const double mhat = st.m[k] / c1;
      const double vhat = st.v[k] / c2;
      p->value.data[k] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
  }
}

}  // namespace tms
