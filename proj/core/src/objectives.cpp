#include "tms/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tms/error.hpp"
#include "tms/special.hpp"

namespace tms {

EvidentialClassification classification_from_evidence(double e_plus, double e_minus) {
  EvidentialClassification c;
  c.e_plus = e_plus;
  c.e_minus = e_minus;
  c.alpha = e_plus + 1.0;
  c.beta = e_minus + 1.0;
  const double s = c.alpha + c.beta;
  c.belief = e_plus / s;
  c.disbelief = e_minus / s;
  c.uncertainty = 2.0 / s;
  c.p_plus = c.alpha / s;
  c.p_minus = c.beta / s;
  return c;
}

EvidentialRegression regression_from_beta(double alpha, double beta) {
  EvidentialRegression r;
  r.alpha = alpha;
  r.beta = beta;
  const double s = alpha + beta;
  r.mean = alpha / s;
  r.variance = alpha * beta / (s * s * (s + 1.0));
  return r;
}

double classification_loss(double alpha, double beta, double y) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw Error(Errc::DomainError, "classification_loss needs alpha, beta > 0");
  }
  const double s = alpha + beta;
  return y * digamma_difference(s, alpha) + (1.0 - y) * digamma_difference(s, beta);
}

double regression_loss(double alpha, double beta, double y) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error(Errc::DomainError, "regression_loss needs alpha, beta > 0");
  if (!(y > 0.0 && y < 1.0)) throw Error(Errc::DomainError, "regression target must lie in (0, 1)");
  const auto r = regression_from_beta(alpha, beta);
  return (r.mean - y) * (r.mean - y) + r.variance;
}

LossBreakdown combined_loss(double loss_G, double loss_Gr, double loss_CL, double lambda) {
  return LossBreakdown{loss_G, loss_Gr, loss_CL, loss_G + loss_Gr + lambda * loss_CL, lambda};
}

EvidentialClassification fuse_predictions(const EvidentialClassification& mol,
                                          const std::optional<EvidentialClassification>& bond) {
  if (!bond) return mol;
  return classification_from_evidence(mol.e_plus + bond->e_plus, mol.e_minus + bond->e_minus);
}

EvidentialRegression fuse_predictions(const EvidentialRegression& mol,
                                      const std::optional<EvidentialRegression>& bond) {
  if (!bond) return mol;
  return regression_from_beta(0.5 * (mol.alpha + bond->alpha), 0.5 * (mol.beta + bond->beta));
}

namespace {

double info_nce_rows(const Matrix& anchor, const Matrix& other, double tau) {
  const std::size_t n = anchor.rows;
  double total = 0.0;
  std::vector<double> logits(n);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      double dot = 0.0;
      for (std::size_t j = 0; j < anchor.cols; ++j) dot += anchor(m, j) * other(k, j);
      logits[k] = dot / tau;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    total += mx + std::log(z) - logits[m];
  }
  return total / static_cast<double>(n);
}

}  // namespace

double contrastive_loss(const Matrix& z_mol, const Matrix& z_bond, double tau, bool symmetric) {
  if (!z_mol.same_shape(z_bond) || z_mol.rows == 0) {
    throw Error(Errc::BatchMismatch, z_mol.shape_string() + " vs " + z_bond.shape_string());
  }
  if (!(tau > 0.0)) throw Error(Errc::DomainError, "tau must be > 0");
  const double forward = info_nce_rows(z_mol, z_bond, tau);
  return symmetric ? 0.5 * (forward + info_nce_rows(z_bond, z_mol, tau)) : forward;
}

namespace {

Var info_nce(Var anchor, Var other, double tau) {
  Var logits = scale(matmul(anchor, transpose(other)), 1.0 / tau);
  Var positives = scale(row_sum(mul(anchor, other)), 1.0 / tau);
  return mean(subtract(logsumexp_rows(logits), positives));
}

}  // namespace

Var contrastive_loss(Var z_mol, Var z_bond, double tau, bool symmetric) {
  if (z_mol.rows() != z_bond.rows() || z_mol.cols() != z_bond.cols() || z_mol.rows() == 0) {
    throw Error(Errc::BatchMismatch, z_mol.value().shape_string() + " vs " + z_bond.value().shape_string());
  }
  if (!(tau > 0.0)) throw Error(Errc::DomainError, "tau must be > 0");
  Var forward = info_nce(z_mol, z_bond, tau);
  if (!symmetric) return forward;
  return scale(add(forward, info_nce(z_bond, z_mol, tau)), 0.5);
}

BetaParams classification_head(Var logits, EvidenceActivation activation) {
  if (logits.cols() != 2) throw Error(Errc::ShapeMismatch, "classification head expects 2 columns");
  Var evidence;
  switch (activation) {
    case EvidenceActivation::Softplus: evidence = softplus(logits); break;
    case EvidenceActivation::Relu: evidence = relu(logits); break;
    case EvidenceActivation::Exp: evidence = exp(logits); break;
  }
  Var ab = add_scalar(evidence, 1.0);
  return {slice_cols(ab, 0, 1), slice_cols(ab, 1, 1)};
}

BetaParams regression_head(Var logits, RegressionBound bound) {
  if (logits.cols() != 2) throw Error(Errc::ShapeMismatch, "regression head expects 2 columns");
  Var act = bound == RegressionBound::Sigmoid ? sigmoid(logits) : softplus(logits);
  Var ab = add_scalar(act, kRegressionEpsilon);
  return {slice_cols(ab, 0, 1), slice_cols(ab, 1, 1)};
}

Var classification_loss(BetaParams params, std::span<const double> labels) {
  Tape& tape = *params.alpha.tape();
  const std::size_t n = params.alpha.rows();
  if (labels.size() != n) throw Error(Errc::BatchMismatch, "label count differs from batch");
  Matrix y(n, 1), not_y(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    y.data[i] = labels[i];
    not_y.data[i] = 1.0 - labels[i];
  }
  Var psi_s = digamma(add(params.alpha, params.beta));
  Var pos = mul(tape.constant(std::move(y)), subtract(psi_s, digamma(params.alpha)));
  Var neg = mul(tape.constant(std::move(not_y)), subtract(psi_s, digamma(params.beta)));
  return add(pos, neg);
}

Var regression_loss(BetaParams params, std::span<const double> targets) {
  Tape& tape = *params.alpha.tape();
  const std::size_t n = params.alpha.rows();
  if (targets.size() != n) throw Error(Errc::BatchMismatch, "target count differs from batch");
  for (double t : targets) {
    if (!(t > 0.0 && t < 1.0)) throw Error(Errc::DomainError, "regression target must lie in (0, 1)");
  }
  Var s = add(params.alpha, params.beta);
  Var inv_s = reciprocal(s);
  Var mean_pred = mul(params.alpha, inv_s);
  Var err = square(subtract(mean_pred, tape.constant(Matrix::column(targets))));
  Var variance = mul(mul(params.alpha, params.beta), mul(square(inv_s), reciprocal(add_scalar(s, 1.0))));
  return add(err, variance);
}

}  // namespace tms
