#include "madmm/problems.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>
#include <utility>

namespace madmm {

SelfAdjointOperator intercept_remainder(Index ydim, double sigma, double r) {
  if (r <= 0.0) throw ConfigError("intercept_remainder: r must be positive");
  Vector diag = Vector::Zero(ydim);
  diag[ydim - 1] = sigma * r;
  return SelfAdjointOperator::FromDiagonal(std::move(diag));
}

namespace {

void assert_build_conditions(const CompositeProblem& p, const SolverConfig& cfg) {
  if (p.ydim() + p.zdim() > 5000) return;
  if (!dominates_negative_half(cfg.S, p.loss_f.majorizer) ||
      !dominates_negative_half(cfg.T, p.loss_g.majorizer)) {
    throw ConfigError("model build: proximal term violates the admissible indefiniteness bound");
  }
  const auto block = [&](const SelfAdjointOperator& sig, const SelfAdjointOperator& prox,
                         const LinearMap& map) {
    return SelfAdjointOperator::Sum(
        {{0.5, sig}, {1.0, prox}, {cfg.sigma, SelfAdjointOperator::MapGram(map)}});
  };
  if (!is_positive_definite(block(p.loss_f.majorizer, cfg.S, p.map_A)) ||
      !is_positive_definite(block(p.loss_g.majorizer, cfg.T, p.map_B))) {
    throw ConfigError("model build: positive definiteness condition failed");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// fused Lasso logistic

FusedLassoModel build_fused_lasso_logistic(const LogisticData& data, double lambda1,
                                           double lambda2, double sigma, double r,
                                           VariantKind variant, double tol, int max_iter) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("build_fused_lasso_logistic: lambda < 0");
  const Index n = data.num_features();
  const Index ny = data.ydim();

  FusedLassoModel model;
  model.lambda1 = lambda1;
  model.lambda2 = lambda2;
  model.data = std::make_shared<LogisticData>(data);

  CompositeProblem& p = model.problem;
  p.loss_f = logistic_loss(data);
  const VariantTerms vt =
      variant_terms(variant, p.loss_f.majorizer, intercept_remainder(ny, sigma, r));
  p.loss_f.majorizer = vt.sigma_hat_eff;
  p.prox_p = ProxOperator::Zero();
  p.loss_g = SmoothLoss::Zero(n);
  p.prox_q = ProxOperator::FusedLasso(lambda1, lambda2);
  // constraint y - z = 0: A pads the intercept away, B = -I
  std::vector<LinearMap> astar_parts;
  astar_parts.push_back(LinearMap::Identity(n));
  astar_parts.push_back(LinearMap::Zero(1, n));
  p.map_A = LinearMap::VStack(std::move(astar_parts));
  p.map_B = LinearMap::Identity(n, -1.0);
  p.rhs_c = Vector::Zero(n);

  SolverConfig& cfg = model.config;
  cfg.sigma = sigma;
  cfg.S = vt.proximal_s;
  cfg.T = SelfAdjointOperator::Zero(n);
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  assert_build_conditions(p, cfg);

  auto shared = model.data;
  const double l1 = lambda1, l2 = lambda2;
  model.residual = [shared, l1, l2](const CompositeProblem&, const Vector& y, const Vector& z,
                                    const Vector& x) {
    return residual_fused(*shared, l1, l2, y, z, x);
  };
  return model;
}

ResidualBreakdown residual_fused(const LogisticData& data, double lambda1, double lambda2,
                                 const Vector& ytilde, const Vector& z, const Vector& x) {
  const Index n = data.num_features();
  ResidualBreakdown out;
  const Vector y = ytilde.head(n);
  out.eta_P = (y - z).norm() / (1.0 + y.norm() + z.norm());
  const Vector grad = logistic_gradient(data, ytilde);
  Vector gx = grad;
  gx.head(n) += x;
  out.eta_D = gx.norm() / (1.0 + grad.norm() + x.norm());
  const Vector pz = fused_lasso_prox(x + z, lambda1, lambda2);
  out.eta_C = (z - pz).norm() / (1.0 + x.norm() + z.norm());
  out.eta = std::max({out.eta_P, out.eta_D, out.eta_C});
  return out;
}

// ---------------------------------------------------------------------------
// constrained logistic

ConstrainedModel build_constrained_logistic(const LogisticData& data, Matrix D, Vector d,
                                            double lambda, double sigma, double r,
                                            VariantKind variant, double tol, int max_iter) {
  if (lambda < 0.0) throw ConfigError("build_constrained_logistic: lambda < 0");
  const Index n = data.num_features();
  const Index ny = data.ydim();
  const Index m = D.rows();
  require_dim(D.cols(), n, "build_constrained_logistic: D");
  require_dim(d.size(), m, "build_constrained_logistic: d");

  ConstrainedModel model;
  model.D = std::move(D);
  model.d = std::move(d);
  model.lambda = lambda;
  model.num_constraints = m;
  model.num_features = n;
  model.data = std::make_shared<LogisticData>(data);

  CompositeProblem& p = model.problem;
  p.loss_f = logistic_loss(data);
  const VariantTerms vt =
      variant_terms(variant, p.loss_f.majorizer, intercept_remainder(ny, sigma, r));
  p.loss_f.majorizer = vt.sigma_hat_eff;
  p.prox_p = ProxOperator::Zero();
  p.loss_g = SmoothLoss::Zero(m + n);
  p.prox_q = ProxOperator::Stacked(
      {{ProxOperator::NonnegOrthant(), m}, {ProxOperator::L1(lambda), n}});

  // A^* (y, y0) = (D y, y); the intercept never enters the constraints
  Matrix dt(m, ny);
  dt.leftCols(n) = model.D;
  dt.col(n).setZero();
  std::vector<Index> first_n(static_cast<std::size_t>(n));
  std::iota(first_n.begin(), first_n.end(), Index{0});
  LinearMap astar = LinearMap::VStack(
      {LinearMap::FromDense(std::move(dt)), LinearMap::RowSelect(std::move(first_n), ny)});
  p.map_A = astar.adjoint();
  p.map_B = LinearMap::Identity(m + n, -1.0);
  p.rhs_c = Vector::Zero(m + n);
  p.rhs_c.head(m) = model.d;

  SolverConfig& cfg = model.config;
  cfg.sigma = sigma;
  cfg.S = vt.proximal_s;
  cfg.T = SelfAdjointOperator::Zero(m + n);
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  assert_build_conditions(p, cfg);

  auto shared = model.data;
  auto dmat = std::make_shared<Matrix>(model.D);
  auto dvec = std::make_shared<Vector>(model.d);
  model.residual = [shared, dmat, dvec, lambda](const CompositeProblem&, const Vector& y,
                                                const Vector& z, const Vector& x) {
    return residual_constrained(*shared, *dmat, *dvec, lambda, y, z, x);
  };
  return model;
}

ResidualBreakdown residual_constrained(const LogisticData& data, const Matrix& D, const Vector& d,
                                       double lambda, const Vector& ytilde, const Vector& z,
                                       const Vector& x) {
  const Index n = data.num_features();
  const Index m = D.rows();
  const Vector y = ytilde.head(n);
  const Vector u = z.head(m);
  const Vector v = z.tail(n);
  const Vector xi = x.head(m);
  const Vector zeta = x.tail(n);

  ResidualBreakdown out;
  const Vector dy = D * y;
  const double p1 = (dy - u - d).norm() / (1.0 + dy.norm() + u.norm() + d.norm());
  const double p2 = (y - v).norm() / (1.0 + y.norm() + v.norm());
  out.eta_P = std::max(p1, p2);

  const Vector grad = logistic_gradient(data, ytilde);
  const Vector dtxi = D.transpose() * xi;
  Vector gx = grad;
  gx.head(n) += dtxi + zeta;
  out.eta_D = gx.norm() / (1.0 + grad.norm() + dtxi.norm() + zeta.norm());

  const double c1 = (v - soft_threshold(zeta + v, lambda)).norm() / (1.0 + zeta.norm() + v.norm());
  const double c2 = (u - project_nonneg(xi + u)).norm() / (1.0 + xi.norm() + u.norm());
  out.eta_C = std::max(c1, c2);
  out.eta = std::max({out.eta_P, out.eta_D, out.eta_C});
  return out;
}

// ---------------------------------------------------------------------------
// sparse group Lasso dual

SglDualModel build_sparse_group_lasso_dual(const Matrix& D, const Vector& d,
                                           const std::vector<std::vector<Index>>& groups,
                                           const Vector& weights, double lambda1, double lambda2,
                                           double sigma, double tol, int max_iter) {
  if (lambda1 <= 0.0 || lambda2 <= 0.0) {
    throw ConfigError("build_sparse_group_lasso_dual: lambda1, lambda2 must be positive");
  }
  const Index rows = D.rows();
  const Index n = D.cols();
  require_dim(d.size(), rows, "build_sparse_group_lasso_dual: d");
  if (static_cast<Index>(groups.size()) != weights.size()) {
    throw DimensionError("build_sparse_group_lasso_dual: groups/weights mismatch");
  }

  // the construction assumes D D^T nonsingular
  {
    const Matrix gram = D * D.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const double lmax = std::max(1.0, es.eigenvalues().maxCoeff());
    if (es.eigenvalues().minCoeff() <= 1e-10 * lmax) {
      throw ConfigError("build_sparse_group_lasso_dual: D D^T is numerically rank deficient");
    }
  }

  // groups must partition the coordinate range
  GroupSpec raw;
  raw.groups = groups;
  raw.radii = Vector::Ones(static_cast<Index>(groups.size()));
  raw.validate(n);
  Index covered = 0;
  for (const auto& g : groups) covered += static_cast<Index>(g.size());
  if (covered != n) {
    throw ConfigError("build_sparse_group_lasso_dual: groups must cover every coordinate");
  }

  SglDualModel model;
  std::vector<Index> perm;
  perm.reserve(static_cast<std::size_t>(n));
  GroupSpec stacked;
  Index off = 0;
  for (std::size_t l = 0; l < groups.size(); ++l) {
    std::vector<Index> range;
    for (Index idx : groups[l]) {
      perm.push_back(idx);
      range.push_back(off++);
    }
    stacked.groups.push_back(std::move(range));
  }
  stacked.radii = lambda2 * weights;
  model.stacked_groups = stacked;

  BlockPartition& part = model.partition;
  part.rhs_c = Vector::Zero(n);

  YBlock eta;
  eta.loss = SmoothLoss::Zero(n);
  eta.S = SelfAdjointOperator::Zero(n);
  eta.A = LinearMap::Identity(n);
  part.y_blocks.push_back(std::move(eta));

  YBlock theta;
  theta.loss = SmoothLoss::Quadratic(SelfAdjointOperator::Identity(rows), d);
  theta.S = SelfAdjointOperator::Identity(rows, -0.5);
  theta.A = LinearMap::FromDense(D);
  part.y_blocks.push_back(std::move(theta));

  part.prox_p = ProxOperator::LinfBall(lambda1);

  ZBlock zb;
  zb.loss = SmoothLoss::Zero(n);
  zb.T = SelfAdjointOperator::Zero(n);
  zb.B = LinearMap::RowSelect(std::move(perm), n);
  part.z_blocks.push_back(std::move(zb));
  part.prox_q = ProxOperator::GroupL2Ball(std::move(stacked));

  SolverConfig& cfg = model.config;
  cfg.sigma = sigma;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  cfg.S = SelfAdjointOperator::Zero(part.ydim());
  cfg.T = SelfAdjointOperator::Zero(part.zdim());
  part.validate(sigma);
  return model;
}

double lambda_from_gamma(const LogisticData& data, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("lambda_from_gamma: gamma out of (0,1)");
  const Vector w = data.features() * data.labels();
  return gamma * w.cwiseAbs().maxCoeff() / static_cast<double>(data.num_samples());
}

}  // namespace madmm
