#pragma once

#include <vector>

#include "madmm/ipadmm.hpp"

namespace madmm {

struct TauConstants {
  double s_tau = 0.0;
  double t_tau = 0.0;  // positive exactly on (0, (1+sqrt(5))/2)
};

TauConstants tau_constants(double tau);

// Dense materializations of the convergence-certificate operators on
// U = Y x Z x X, together with the spectral constants entering the
// residual bound. Desk-scale by design.
struct CertificateOperators {
  double sigma = 0.0, tau = 0.0;
  double s_tau = 0.0, t_tau = 0.0;
  double kappa1 = 0.0, kappa2 = 0.0, kappa3 = 0.0;
  Index ydim = 0, zdim = 0, xdim = 0;

  Matrix M;         // Diag(Sf+S, Sg+T+sigma BB*, (tau sigma)^-1 I) + s_tau sigma EE*
  Matrix H;         // Diag(Hf, Hg, t_tau (tau^2 sigma)^-1 I) + 1/4 t_tau sigma EE*
  Matrix H0;        // max(kappa) Diag(I, I + sigma BB*, (tau^2 sigma)^-1 I)
  Matrix Hf;        // 1/2 Sf + S
  Matrix Hg;        // 1/2 Sg + T + 2 t_tau tau sigma BB*
  Matrix half_g;    // 1/2 Sg + T
  Matrix SfS;       // Sf + S          (phi, y part)
  Matrix SgT;       // Sg + T          (history seminorm)
  Matrix phi_z;     // Sg + T + sigma BB*

  Index udim() const { return ydim + zdim + xdim; }
  Vector stack(const Vector& y, const Vector& z, const Vector& x) const;
  double m_norm2(const Vector& du) const { return du.dot(M * du); }
  double h_norm2(const Vector& du) const { return du.dot(H * du); }
  double h0_norm2(const Vector& du) const { return du.dot(H0 * du); }
  // phi relative to a reference point
  double phi(const CompositeProblem& p, const IterateState& s, const Vector& ybar,
             const Vector& zbar, const Vector& xbar) const;
};

CertificateOperators build_certificates(const CompositeProblem& p, const SolverConfig& cfg,
                                        Index cap = 5000);

// || R(u+) ||^2 <= || u+ - u ||^2_{H0} with relative slack
bool audit_lemma31(const CertificateOperators& cert, const IterateState& u_prev,
                   const IterateState& u_next, const KktResidual& r_next, double slack = 1e-8);

// Per-stream audit of the one-step inequalities. `stream` holds the states
// u^0, u^1, ..., u^K in iteration order; ubar is a high-accuracy reference.
struct StreamAudit {
  int transitions = 0;
  bool lemma31_ok = true;
  bool descent_ok = true;    // contraction of the Lyapunov pair
  bool ineq37_ok = true;     // phi decrease bound
  bool ineq39_ok = true;     // shifted-potential decrease bound
  bool v_monotone_ok = true;
  double lemma31_worst = 0.0;  // most negative normalized slack observed
  double descent_worst = 0.0;
  double ineq37_worst = 0.0;
  double ineq39_worst = 0.0;
  double v_worst = 0.0;
};

StreamAudit audit_stream(const CertificateOperators& cert, const CompositeProblem& p,
                         const std::vector<IterateState>& stream, const Vector& ybar,
                         const Vector& zbar, const Vector& xbar, double slack = 1e-8);

struct GeometricFit {
  double ratio = 1.0;
  double r2 = 0.0;
  int points = 0;
};

// least-squares fit of log(values[k]) ~ a + k log(ratio) over k >= k0,
// skipping the numerically flat floor
GeometricFit fit_geometric(const std::vector<double>& values, int k0 = 0);

struct RateEstimate {
  std::vector<double> lyapunov;  // V_k for k = 1..K (index 0 -> k = 1)
  double ratio = 1.0;            // fitted per-iteration contraction factor
  double fit_r2 = 0.0;
  int burn_in = 0;
  int points_used = 0;
  bool linear = false;
};

// Least-squares fit of log V_k over the post-burn-in tail. etas[k] is the
// stopping residual at state k; burn-in starts where it first drops
// below 1e-2.
RateEstimate estimate_linear_rate(const CertificateOperators& cert,
                                  const std::vector<IterateState>& stream,
                                  const std::vector<double>& etas, const Vector& ybar,
                                  const Vector& zbar, const Vector& xbar);

struct Lemma35Result {
  bool pd_blocks = false;
  bool pd_H = false;
  bool pd_M = false;
};

// (1/2 Sf + S + sigma AA* > 0 and 1/2 Sg + T + sigma BB* > 0) <=> H > 0 => M > 0
Lemma35Result check_lemma35(const CompositeProblem& p, const SolverConfig& cfg);

}  // namespace madmm
