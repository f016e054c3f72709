#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "madmm/linear_map.hpp"
#include "madmm/losses.hpp"
#include "madmm/operators.hpp"
#include "madmm/prox.hpp"
#include "madmm/types.hpp"

namespace madmm {

// min_{y,z} p(y) + f(y) + q(z) + g(z)  s.t.  A* y + B* z = c
struct CompositeProblem {
  SmoothLoss loss_f;
  ProxOperator prox_p;
  SmoothLoss loss_g;
  ProxOperator prox_q;
  LinearMap map_A;  // A : X -> Y
  LinearMap map_B;  // B : X -> Z
  Vector rhs_c;

  Index ydim() const { return map_A.rows(); }
  Index zdim() const { return map_B.rows(); }
  Index xdim() const { return rhs_c.size(); }

  void validate() const;
  double objective(const Vector& y, const Vector& z) const;
};

enum class VariantKind { IPADMM, SPADMM, LIPADMM, LSPADMM };

const char* variant_name(VariantKind kind);
std::optional<VariantKind> parse_variant(const std::string& name);

// Proximal-term recipe. The L-variants replace the structured majorizer by
// its largest eigenvalue times the identity; the indefinite variants set
// S = -1/2 (effective majorizer) + remainder.
struct VariantTerms {
  SelfAdjointOperator sigma_hat_eff;
  SelfAdjointOperator proximal_s;
};
VariantTerms variant_terms(VariantKind kind, const SelfAdjointOperator& sigma_hat,
                           const SelfAdjointOperator& remainder);

enum class LinearSolverKind { Auto, Dense, SMW };

struct SolverConfig {
  double sigma = 1.0;
  double tau = 1.618;
  SelfAdjointOperator S;  // proximal term on y
  SelfAdjointOperator T;  // proximal term on z
  double tol = 1e-6;
  int max_iter = 50000;
  bool verify_assumptions = false;
  // experimental: permit tau outside (0, (1+sqrt(5))/2) so diagnostics can
  // exercise the out-of-range regime; the convergence theory does not apply
  bool allow_wide_tau = false;
  LinearSolverKind y_solver = LinearSolverKind::Auto;
  LinearSolverKind z_solver = LinearSolverKind::Auto;

  void validate() const;  // sigma > 0, tau in (0, (1+sqrt(5))/2), ...
};

struct IterateState {
  Vector y, z, x;
  Vector r;  // A* y + B* z - c
  Vector z_prev;
  int iter = 0;

  static IterateState zeros(const CompositeProblem& p);
};

struct ResidualBreakdown {
  double eta = 0.0, eta_P = 0.0, eta_D = 0.0, eta_C = 0.0;
};

using ResidualFn = std::function<ResidualBreakdown(const CompositeProblem&, const Vector& y,
                                                   const Vector& z, const Vector& x)>;

struct KktResidual {
  Vector ry, rz, rx;
  double squared_norm() const { return ry.squaredNorm() + rz.squaredNorm() + rx.squaredNorm(); }
  double norm() const { return std::sqrt(squared_norm()); }
};

// R(u) of the KKT system; vanishes exactly at KKT points
KktResidual kkt_residual(const CompositeProblem& p, const Vector& y, const Vector& z,
                         const Vector& x);

// fallback stopping metric: block norms of R(u) over 1 + ||u||
ResidualBreakdown generic_residual(const CompositeProblem& p, const Vector& y, const Vector& z,
                                   const Vector& x);

enum class SolveStatus { Converged, MaxIterReached };

struct TraceRow {
  int iter = 0;
  double eta = 0.0, eta_P = 0.0, eta_D = 0.0, eta_C = 0.0;
  double objective = 0.0;
  double lyapunov = 0.0;
  bool has_lyapunov = false;
  double seconds = 0.0;
};

struct SolveOptions {
  ResidualFn residual;                                 // empty -> generic_residual
  std::function<void(const IterateState&)> observer;   // called on start and after each iteration
  bool record_trace = true;
};

struct SolveResult {
  IterateState state;
  SolveStatus status = SolveStatus::MaxIterReached;
  std::vector<TraceRow> trace;
  int iterations = 0;
};

// Exact solver for one half-step: minimize theta(w) + 1/2 <w, W w> - <rhs, w>
// where W = curvature + sigma * A A^*. Two regimes: theta == 0 (linear
// system, factorized once) or W = alpha I (proximal evaluation).
class SubproblemSolver {
 public:
  SubproblemSolver(ProxOperator prox, const SelfAdjointOperator& curvature, const LinearMap& map,
                   double sigma, LinearSolverKind kind, const char* label);

  Vector step(const Vector& rhs) const;

  bool prox_regime() const { return prox_regime_; }
  double alpha() const { return alpha_; }
  // residual of the first-order condition at w for the given rhs (linear regime)
  double stationarity_residual(const Vector& w, const Vector& rhs) const;

 private:
  ProxOperator prox_;
  SelfAdjointOperator w_op_;
  bool prox_regime_ = false;
  double alpha_ = 0.0;
  bool use_smw_ = false;
  std::shared_ptr<SMWFactorization> smw_;
  std::shared_ptr<Eigen::LDLT<Matrix>> dense_;
};

// one-shot step operations (the engine keeps prepared solvers internally)
Vector y_step(const CompositeProblem& p, const SolverConfig& cfg, const IterateState& state);
Vector z_step(const CompositeProblem& p, const SolverConfig& cfg, const IterateState& state,
              const Vector& y_new);
Vector x_step(const SolverConfig& cfg, const IterateState& state, const Vector& r_new);

SolveResult solve(const CompositeProblem& p, const SolverConfig& cfg, IterateState start,
                  const SolveOptions& options = {});

}  // namespace madmm
