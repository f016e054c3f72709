#pragma once

#include <memory>

#include "madmm/ipadmm.hpp"
#include "madmm/sgs.hpp"

namespace madmm {

// --------------------------------------------------------------------------
// Fused-Lasso (and plain Lasso via lambda2 = 0) regularized logistic
// regression:  min f(y, y0) + lambda1 ||z||_1 + lambda2 TV(z)  s.t. y = z.

struct FusedLassoModel {
  CompositeProblem problem;
  SolverConfig config;
  ResidualFn residual;  // eta_FL
  double lambda1 = 0.0, lambda2 = 0.0;
  std::shared_ptr<LogisticData> data;
};

FusedLassoModel build_fused_lasso_logistic(const LogisticData& data, double lambda1,
                                           double lambda2, double sigma, double r,
                                           VariantKind variant, double tol = 1e-6,
                                           int max_iter = 50000);

ResidualBreakdown residual_fused(const LogisticData& data, double lambda1, double lambda2,
                                 const Vector& ytilde, const Vector& z, const Vector& x);

// --------------------------------------------------------------------------
// Constrained Lasso logistic regression:
//  min f(y, y0) + lambda ||v||_1 + indicator(u >= 0)
//  s.t. D y - u = d,  y - v = 0;  multipliers x = (xi, zeta).

struct ConstrainedModel {
  CompositeProblem problem;
  SolverConfig config;
  ResidualFn residual;  // eta_CL
  Matrix D;
  Vector d;
  double lambda = 0.0;
  Index num_constraints = 0, num_features = 0;
  std::shared_ptr<LogisticData> data;
};

ConstrainedModel build_constrained_logistic(const LogisticData& data, Matrix D, Vector d,
                                            double lambda, double sigma, double r,
                                            VariantKind variant, double tol = 1e-5,
                                            int max_iter = 50000);

ResidualBreakdown residual_constrained(const LogisticData& data, const Matrix& D, const Vector& d,
                                       double lambda, const Vector& ytilde, const Vector& z,
                                       const Vector& x);

// --------------------------------------------------------------------------
// Sparse group Lasso dual:
//  min 1/2 ||theta||^2 + d^T theta + indicator(||eta||_inf <= lambda1)
//      + indicator(||z_[l]|| <= lambda2 w_l)
//  s.t. D^T theta + eta + P^* z = 0,
// solved by the multi-block sweep method with y-blocks (eta, theta).

struct SglDualModel {
  BlockPartition partition;
  SolverConfig config;
  GroupSpec stacked_groups;  // group ranges in the stacked z ordering
};

SglDualModel build_sparse_group_lasso_dual(const Matrix& D, const Vector& d,
                                           const std::vector<std::vector<Index>>& groups,
                                           const Vector& weights, double lambda1, double lambda2,
                                           double sigma, double tol = 1e-6, int max_iter = 50000);

// lambda = (gamma / N) * || sum_i b_i B_i ||_inf, 0 < gamma < 1
double lambda_from_gamma(const LogisticData& data, double gamma);

// remainder operator sigma * Diag(0, ..., 0, r) acting on the intercept
SelfAdjointOperator intercept_remainder(Index ydim, double sigma, double r);

}  // namespace madmm
