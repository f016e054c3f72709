#pragma once

#include <functional>

#include "madmm/operators.hpp"
#include "madmm/types.hpp"

namespace madmm {

// Smooth convex loss with a positive semidefinite majorization operator
// (upper curvature bound) and an optional lower curvature operator.
struct SmoothLoss {
  Index dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  SelfAdjointOperator majorizer;        // Sigma_hat, PSD
  SelfAdjointOperator lower_curvature;  // Sigma, PSD (zero by default)
  bool heuristic_majorizer = false;     // truncated operator, no guarantee

  static SmoothLoss Zero(Index dim);
  // value 1/2 <v, Qv> + <d, v>; exact curvature on both sides
  static SmoothLoss Quadratic(SelfAdjointOperator q, Vector d);
};

// Binary classification data for the logistic loss. Column i of `features`
// is the predictor B_i; labels are -1/+1. The augmented sample matrix
// A = [A_1, ..., A_N] with A_i = [-b_i B_i; -b_i] is kept in sparse form.
class LogisticData {
 public:
  LogisticData(SparseMatrix features, Vector labels);

  Index num_samples() const { return labels_.size(); }
  Index num_features() const { return features_.rows(); }
  Index ydim() const { return num_features() + 1; }

  const SparseMatrix& features() const { return features_; }
  const Vector& labels() const { return labels_; }
  const SparseMatrix& sample_matrix() const { return a_; }  // (n+1) x N

  // t_i = A_i^T ytilde = -b_i (B_i^T y + y0)
  Vector margins(const Vector& ytilde) const;
  // A s in R^{n+1}
  Vector apply_sample_matrix(const Vector& s) const;

 private:
  SparseMatrix features_;  // n x N
  Vector labels_;
  SparseMatrix a_;  // (n+1) x N
};

// (1/N) sum log(1 + exp(A_i^T ytilde)), overflow-safe
double logistic_value(const LogisticData& data, const Vector& ytilde);

// (1/N) sum A_i exp(t_i) / (1 + exp(t_i))
Vector logistic_gradient(const LogisticData& data, const Vector& ytilde);

// Sigma_hat = 1/(4N) A A^T as a low-rank Gram operator
SelfAdjointOperator logistic_majorizer(const LogisticData& data);

enum class MajorizerScaling {
  Consistent,  // 1/(4N) times the truncated Gram
  Unscaled,    // the truncated Gram itself
};

// Truncated-SVD substitute sum_{i<=K} mu_i P_i P_i^T for the full Gram;
// a computational heuristic, not a certified majorizer.
SelfAdjointOperator lowrank_majorizer(const LogisticData& data, Index k,
                                      MajorizerScaling scaling = MajorizerScaling::Consistent);

// logistic loss with the certified majorizer attached (lower curvature zero)
SmoothLoss logistic_loss(const LogisticData& data);

}  // namespace madmm
