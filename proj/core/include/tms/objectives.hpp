#pragma once

#include <optional>
#include <span>

#include "tms/matrix.hpp"
#include "tms/tape.hpp"

namespace tms {

/// Subjective-logic view of a Beta(alpha, beta) opinion with K = 2.
struct EvidentialClassification {
  double e_plus = 0.0;
  double e_minus = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double belief = 0.0;
  double disbelief = 0.0;
  double uncertainty = 1.0;
  double p_plus = 0.5;
  double p_minus = 0.5;

  double strength() const { return alpha + beta; }
};

EvidentialClassification classification_from_evidence(double e_plus, double e_minus);

struct EvidentialRegression {
  double alpha = 1.0;
  double beta = 1.0;
  double mean = 0.5;
  double variance = 1.0 / 12.0;
};

EvidentialRegression regression_from_beta(double alpha, double beta);

/// Expected binary cross-entropy under Beta(alpha, beta); DomainError if
/// either parameter is non-positive.
double classification_loss(double alpha, double beta, double y);
/// Expected squared error under Beta(alpha, beta): squared mean error plus
/// the Beta variance. DomainError unless y is in (0, 1).
double regression_loss(double alpha, double beta, double y);

struct LossBreakdown {
  double loss_G = 0.0;
  double loss_Gr = 0.0;
  double loss_CL = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

LossBreakdown combined_loss(double loss_G, double loss_Gr, double loss_CL, double lambda);

/// Evidence-sum fusion of the two views; an absent bond view passes the
/// molecular view through.
EvidentialClassification fuse_predictions(const EvidentialClassification& mol,
                                          const std::optional<EvidentialClassification>& bond);
/// Parameter-average fusion for the regression head.
EvidentialRegression fuse_predictions(const EvidentialRegression& mol,
                                      const std::optional<EvidentialRegression>& bond);

/// Cross-view InfoNCE on plain matrices (rows are paired samples).
double contrastive_loss(const Matrix& z_mol, const Matrix& z_bond, double tau, bool symmetric = false);

// Differentiable versions on the tape.

/// Mean over rows m of -log softmax_n(z_m . zr_n / tau)[m]. With
/// `symmetric`, averages with the bond-anchored direction. Throws
/// BatchMismatch when the row counts differ.
Var contrastive_loss(Var z_mol, Var z_bond, double tau, bool symmetric = false);

enum class EvidenceActivation { Softplus, Relu, Exp };
enum class RegressionBound { Sigmoid, Softplus };

struct BetaParams {
  Var alpha;  // n x 1
  Var beta;   // n x 1
};

/// Two-column head output -> non-negative evidence -> alpha = e + 1.
BetaParams classification_head(Var logits, EvidenceActivation activation = EvidenceActivation::Softplus);
/// Two-column head output -> sigmoid(.) + 1e-6 (or softplus(.) + 1e-6).
BetaParams regression_head(Var logits, RegressionBound bound = RegressionBound::Sigmoid);

inline constexpr double kRegressionEpsilon = 1e-6;

/// Per-sample losses as an n x 1 column.
Var classification_loss(BetaParams params, std::span<const double> labels);
Var regression_loss(BetaParams params, std::span<const double> targets);

}  // namespace tms
