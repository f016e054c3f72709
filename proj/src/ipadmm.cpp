#include "madmm/ipadmm.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>

namespace madmm {

namespace {
constexpr double kGolden = 1.6180339887498949;  // (1 + sqrt(5)) / 2
}

void CompositeProblem::validate() const {
  require_dim(loss_f.dim, ydim(), "CompositeProblem: loss_f");
  require_dim(loss_g.dim, zdim(), "CompositeProblem: loss_g");
  require_dim(map_A.cols(), xdim(), "CompositeProblem: map_A");
  require_dim(map_B.cols(), xdim(), "CompositeProblem: map_B");
  require_dim(loss_f.majorizer.dim(), ydim(), "CompositeProblem: majorizer f");
  require_dim(loss_g.majorizer.dim(), zdim(), "CompositeProblem: majorizer g");
}

double CompositeProblem::objective(const Vector& y, const Vector& z) const {
  return loss_f.value(y) + prox_p.value(y, 1e-9) + loss_g.value(z) + prox_q.value(z, 1e-9);
}

const char* variant_name(VariantKind kind) {
  switch (kind) {
    case VariantKind::IPADMM:
      return "ipadmm";
    case VariantKind::SPADMM:
      return "spadmm";
    case VariantKind::LIPADMM:
      return "l-ipadmm";
    case VariantKind::LSPADMM:
      return "l-spadmm";
  }
  return "?";
}

std::optional<VariantKind> parse_variant(const std::string& name) {
  if (name == "ipadmm") return VariantKind::IPADMM;
  if (name == "spadmm") return VariantKind::SPADMM;
  if (name == "l-ipadmm") return VariantKind::LIPADMM;
  if (name == "l-spadmm") return VariantKind::LSPADMM;
  return std::nullopt;
}

VariantTerms variant_terms(VariantKind kind, const SelfAdjointOperator& sigma_hat,
                           const SelfAdjointOperator& remainder) {
  require_dim(remainder.dim(), sigma_hat.dim(), "variant_terms");
  VariantTerms out;
  const bool lipschitz = kind == VariantKind::LIPADMM || kind == VariantKind::LSPADMM;
  if (lipschitz) {
    const EigenEstimate lmax = max_eigenvalue(sigma_hat, 1e-10);
    if (!lmax.converged) throw ConfigError("variant_terms: eigenvalue estimation did not converge");
    out.sigma_hat_eff = SelfAdjointOperator::Identity(sigma_hat.dim(), lmax.value);
  } else {
    out.sigma_hat_eff = sigma_hat;
  }
  const bool indefinite = kind == VariantKind::IPADMM || kind == VariantKind::LIPADMM;
  if (indefinite) {
    out.proximal_s =
        SelfAdjointOperator::Sum({{-0.5, out.sigma_hat_eff}, {1.0, remainder}});
  } else {
    out.proximal_s = remainder;
  }
  return out;
}

void SolverConfig::validate() const {
  if (sigma <= 0.0) throw ConfigError("SolverConfig: sigma must be positive");
  if (!(tau > 0.0 && (allow_wide_tau || tau < kGolden))) {
    throw ConfigError("SolverConfig: tau must lie in (0, (1+sqrt(5))/2)");
  }
  if (tol <= 0.0) throw ConfigError("SolverConfig: tol must be positive");
  if (max_iter <= 0) throw ConfigError("SolverConfig: max_iter must be positive");
}

IterateState IterateState::zeros(const CompositeProblem& p) {
  IterateState s;
  s.y = Vector::Zero(p.ydim());
  s.z = Vector::Zero(p.zdim());
  s.x = Vector::Zero(p.xdim());
  s.z_prev = s.z;
  s.r = p.map_A.apply_adjoint(s.y) + p.map_B.apply_adjoint(s.z) - p.rhs_c;
  s.iter = 0;
  return s;
}

KktResidual kkt_residual(const CompositeProblem& p, const Vector& y, const Vector& z,
                         const Vector& x) {
  KktResidual res;
  const Vector gy = p.loss_f.gradient(y) + p.map_A.apply(x);
  res.ry = y - p.prox_p.evaluate(y - gy, 1.0);
  const Vector gz = p.loss_g.gradient(z) + p.map_B.apply(x);
  res.rz = z - p.prox_q.evaluate(z - gz, 1.0);
  res.rx = p.rhs_c - p.map_A.apply_adjoint(y) - p.map_B.apply_adjoint(z);
  return res;
}

ResidualBreakdown generic_residual(const CompositeProblem& p, const Vector& y, const Vector& z,
                                   const Vector& x) {
  const KktResidual res = kkt_residual(p, y, z, x);
  const double denom = 1.0 + std::sqrt(y.squaredNorm() + z.squaredNorm() + x.squaredNorm());
  ResidualBreakdown out;
  out.eta_D = res.ry.norm() / denom;
  out.eta_C = res.rz.norm() / denom;
  out.eta_P = res.rx.norm() / denom;
  out.eta = std::max({out.eta_P, out.eta_D, out.eta_C});
  return out;
}

// ---------------------------------------------------------------------------
// SubproblemSolver

SubproblemSolver::SubproblemSolver(ProxOperator prox, const SelfAdjointOperator& curvature,
                                   const LinearMap& map, double sigma, LinearSolverKind kind,
                                   const char* label)
    : prox_(std::move(prox)) {
  require_dim(curvature.dim(), map.rows(), label);
  w_op_ = SelfAdjointOperator::Sum(
      {{1.0, curvature}, {sigma, SelfAdjointOperator::MapGram(map)}});

  if (!prox_.is_zero()) {
    const auto alpha = w_op_.as_scaled_identity();
    if (!alpha) {
      throw ConfigError(std::string(label) +
                        ": subproblem has a proximal part but the system operator is not a"
                        " multiple of the identity; restructure the blocks (e.g. via sGS)");
    }
    if (*alpha <= 1e-10) {
      throw ConfigError(std::string(label) + ": degenerate subproblem scaling");
    }
    prox_regime_ = true;
    alpha_ = *alpha;
    return;
  }

  const Index dim = w_op_.dim();
  const bool want_dense = kind == LinearSolverKind::Dense ||
                          (kind == LinearSolverKind::Auto && dim <= 2000);
  if (want_dense) {
    const Matrix w = w_op_.materialize(dim);
    if (dim <= 1000) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
      const double lmax = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      if (es.eigenvalues().minCoeff() <= 1e-10 * lmax) {
        throw ConfigError(std::string(label) + ": system operator is not positive definite");
      }
    }
    dense_ = std::make_shared<Eigen::LDLT<Matrix>>(w);
    if (dense_->info() != Eigen::Success || !dense_->isPositive()) {
      throw ConfigError(std::string(label) + ": dense factorization failed");
    }
    return;
  }

  // SMW regime: positive diagonal plus a thin Gram tail
  const auto parts = w_op_.as_diag_plus_grams();
  if (!parts) {
    throw ConfigError(std::string(label) +
                      ": system operator is neither small enough for a dense factorization"
                      " nor of diagonal-plus-Gram form");
  }
  if ((parts->diag.array() <= 0.0).any()) {
    throw ConfigError(std::string(label) + ": SMW requires a strictly positive diagonal part");
  }
  Index k = 0;
  for (const auto& [s, u] : parts->grams) {
    if (s < 0.0) {
      throw ConfigError(std::string(label) + ": SMW requires positive Gram scales");
    }
    k += u.cols();
  }
  if (k > 2000) {
    throw ConfigError(std::string(label) + ": Gram rank too large for SMW");
  }
  Matrix u_all(dim, k);
  Index off = 0;
  for (const auto& [s, u] : parts->grams) {
    u_all.middleCols(off, u.cols()) = std::sqrt(s) * u;
    off += u.cols();
  }
  smw_ = std::make_shared<SMWFactorization>(parts->diag, std::move(u_all));
  use_smw_ = true;
}

Vector SubproblemSolver::step(const Vector& rhs) const {
  if (prox_regime_) {
    return prox_.evaluate(rhs / alpha_, 1.0 / alpha_);
  }
  if (use_smw_) return smw_->solve(rhs);
  return dense_->solve(rhs);
}

double SubproblemSolver::stationarity_residual(const Vector& w, const Vector& rhs) const {
  return (w_op_.apply(w) - rhs).norm();
}

// ---------------------------------------------------------------------------
// steps and the main loop

namespace {

struct PreparedEngine {
  SubproblemSolver ysolve;
  SubproblemSolver zsolve;

  PreparedEngine(const CompositeProblem& p, const SolverConfig& cfg)
      : ysolve(p.prox_p,
               SelfAdjointOperator::Sum({{1.0, p.loss_f.majorizer}, {1.0, cfg.S}}), p.map_A,
               cfg.sigma, cfg.y_solver, "y-step"),
        zsolve(p.prox_q,
               SelfAdjointOperator::Sum({{1.0, p.loss_g.majorizer}, {1.0, cfg.T}}), p.map_B,
               cfg.sigma, cfg.z_solver, "z-step") {}

  Vector rhs_y(const CompositeProblem& p, const SolverConfig& cfg, const Vector& y,
               const Vector& z, const Vector& x) const {
    const Vector bz = p.map_B.apply_adjoint(z) - p.rhs_c;
    return p.loss_f.majorizer.apply(y) + cfg.S.apply(y) - p.loss_f.gradient(y) -
           p.map_A.apply(x) - cfg.sigma * p.map_A.apply(bz);
  }

  Vector rhs_z(const CompositeProblem& p, const SolverConfig& cfg, const Vector& z,
               const Vector& x, const Vector& ay_new) const {
    return p.loss_g.majorizer.apply(z) + cfg.T.apply(z) - p.loss_g.gradient(z) -
           p.map_B.apply(x) - cfg.sigma * p.map_B.apply(ay_new - p.rhs_c);
  }
};

void check_assumptions(const CompositeProblem& p, const SolverConfig& cfg) {
  const Index cap = 5000;
  if (p.ydim() + p.zdim() > cap) return;  // desk-scale checks only
  if (!dominates_negative_half(cfg.S, p.loss_f.majorizer)) {
    throw ConfigError("assumption check failed: S is more indefinite than -1/2 Sigma_hat_f");
  }
  if (!dominates_negative_half(cfg.T, p.loss_g.majorizer)) {
    throw ConfigError("assumption check failed: T is more indefinite than -1/2 Sigma_hat_g");
  }
  const auto blockpd = [&](const SelfAdjointOperator& half_sigma_s, const LinearMap& map) {
    return is_positive_definite(SelfAdjointOperator::Sum(
        {{1.0, half_sigma_s}, {cfg.sigma, SelfAdjointOperator::MapGram(map)}}));
  };
  const auto hf = SelfAdjointOperator::Sum({{0.5, p.loss_f.majorizer}, {1.0, cfg.S}});
  const auto hg = SelfAdjointOperator::Sum({{0.5, p.loss_g.majorizer}, {1.0, cfg.T}});
  if (!blockpd(hf, p.map_A) || !blockpd(hg, p.map_B)) {
    throw ConfigError(
        "assumption check failed: 1/2 Sigma_hat + proximal term + sigma Gram is not"
        " positive definite");
  }
}

}  // namespace

Vector y_step(const CompositeProblem& p, const SolverConfig& cfg, const IterateState& state) {
  PreparedEngine eng(p, cfg);
  return eng.ysolve.step(eng.rhs_y(p, cfg, state.y, state.z, state.x));
}

Vector z_step(const CompositeProblem& p, const SolverConfig& cfg, const IterateState& state,
              const Vector& y_new) {
  PreparedEngine eng(p, cfg);
  return eng.zsolve.step(eng.rhs_z(p, cfg, state.z, state.x, p.map_A.apply_adjoint(y_new)));
}

Vector x_step(const SolverConfig& cfg, const IterateState& state, const Vector& r_new) {
  return state.x + cfg.tau * cfg.sigma * r_new;
}

SolveResult solve(const CompositeProblem& p, const SolverConfig& cfg, IterateState start,
                  const SolveOptions& options) {
  p.validate();
  cfg.validate();
  require_dim(cfg.S.dim(), p.ydim(), "solve: S");
  require_dim(cfg.T.dim(), p.zdim(), "solve: T");
  if (cfg.verify_assumptions) check_assumptions(p, cfg);

  const ResidualFn residual = options.residual
                                  ? options.residual
                                  : ResidualFn(&generic_residual);

  PreparedEngine eng(p, cfg);
  SolveResult out;
  IterateState& s = out.state;
  s = std::move(start);
  s.r = p.map_A.apply_adjoint(s.y) + p.map_B.apply_adjoint(s.z) - p.rhs_c;
  if (s.z_prev.size() != s.z.size()) s.z_prev = s.z;

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  if (options.observer) options.observer(s);

  ResidualBreakdown eta = residual(p, s.y, s.z, s.x);
  if (eta.eta < cfg.tol) {
    out.status = SolveStatus::Converged;
    out.iterations = 0;
    if (options.record_trace) {
      TraceRow row;
      row.iter = 0;
      row.eta = eta.eta;
      row.eta_P = eta.eta_P;
      row.eta_D = eta.eta_D;
      row.eta_C = eta.eta_C;
      row.objective = p.objective(s.y, s.z);
      row.seconds = elapsed();
      out.trace.push_back(row);
    }
    return out;
  }

  for (int k = 0; k < cfg.max_iter; ++k) {
    const Vector y_new = eng.ysolve.step(eng.rhs_y(p, cfg, s.y, s.z, s.x));
    const Vector ay = p.map_A.apply_adjoint(y_new);
    const Vector z_new = eng.zsolve.step(eng.rhs_z(p, cfg, s.z, s.x, ay));
    const Vector r_new = ay + p.map_B.apply_adjoint(z_new) - p.rhs_c;

    s.z_prev = s.z;
    s.y = y_new;
    s.z = z_new;
    s.x += cfg.tau * cfg.sigma * r_new;
    s.r = r_new;
    s.iter = k + 1;

    if (options.observer) options.observer(s);

    eta = residual(p, s.y, s.z, s.x);
    if (options.record_trace) {
      TraceRow row;
      row.iter = s.iter;
      row.eta = eta.eta;
      row.eta_P = eta.eta_P;
      row.eta_D = eta.eta_D;
      row.eta_C = eta.eta_C;
      row.objective = p.objective(s.y, s.z);
      row.seconds = elapsed();
      out.trace.push_back(row);
    }
    if (eta.eta < cfg.tol) {
      out.status = SolveStatus::Converged;
      out.iterations = s.iter;
      return out;
    }
  }
  out.status = SolveStatus::MaxIterReached;
  out.iterations = s.iter;
  return out;
}

}  // namespace madmm
