#include "madmm/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace madmm {

TauConstants tau_constants(double tau) {
  if (tau <= 0.0) throw ConfigError("tau_constants: tau must be positive");
  const double m = std::min(tau, 1.0 / tau);
  TauConstants out;
  out.s_tau = (5.0 - tau - 3.0 * m) / 4.0;
  out.t_tau = (1.0 - tau + m) / 2.0;
  return out;
}

namespace {

double lambda_max_of(const SelfAdjointOperator& op) {
  const EigenEstimate est = max_eigenvalue(op, 1e-8);
  return est.value;  // best estimate even without formal convergence
}

}  // namespace

Vector CertificateOperators::stack(const Vector& y, const Vector& z, const Vector& x) const {
  Vector u(udim());
  u.segment(0, ydim) = y;
  u.segment(ydim, zdim) = z;
  u.segment(ydim + zdim, xdim) = x;
  return u;
}

double CertificateOperators::phi(const CompositeProblem&, const IterateState& s,
                                 const Vector& ybar, const Vector& zbar,
                                 const Vector& xbar) const {
  const Vector dy = s.y - ybar;
  const Vector dz = s.z - zbar;
  const Vector dx = s.x - xbar;
  return dx.squaredNorm() / (tau * sigma) + dy.dot(SfS * dy) + dz.dot(phi_z * dz);
}

CertificateOperators build_certificates(const CompositeProblem& p, const SolverConfig& cfg,
                                        Index cap) {
  p.validate();
  cfg.validate();
  CertificateOperators cert;
  cert.sigma = cfg.sigma;
  cert.tau = cfg.tau;
  const TauConstants tc = tau_constants(cfg.tau);
  cert.s_tau = tc.s_tau;
  cert.t_tau = tc.t_tau;
  cert.ydim = p.ydim();
  cert.zdim = p.zdim();
  cert.xdim = p.xdim();
  if (cert.udim() > cap) throw ConfigError("build_certificates: dimension cap exceeded");

  const Matrix sf = p.loss_f.majorizer.materialize(cap);
  const Matrix sg = p.loss_g.majorizer.materialize(cap);
  const Matrix smat = cfg.S.materialize(cap);
  const Matrix tmat = cfg.T.materialize(cap);
  const Matrix amat = p.map_A.materialize(cap);  // Y x X
  const Matrix bmat = p.map_B.materialize(cap);  // Z x X
  const Matrix bbt = bmat * bmat.transpose();

  const double sigma = cfg.sigma;
  const double tau = cfg.tau;

  cert.SfS = sf + smat;
  cert.SgT = sg + tmat;
  cert.phi_z = cert.SgT + sigma * bbt;
  cert.Hf = 0.5 * sf + smat;
  cert.half_g = 0.5 * sg + tmat;
  cert.Hg = cert.half_g + 2.0 * cert.t_tau * tau * sigma * bbt;

  const Index ny = cert.ydim, nz = cert.zdim, nx = cert.xdim;
  const Index nu = cert.udim();

  // E : X -> U with E x = (A x, B x, 0)
  Matrix e = Matrix::Zero(nu, nx);
  e.topRows(ny) = amat;
  e.middleRows(ny, nz) = bmat;
  const Matrix eet = e * e.transpose();

  cert.M = Matrix::Zero(nu, nu);
  cert.M.block(0, 0, ny, ny) = cert.SfS;
  cert.M.block(ny, ny, nz, nz) = cert.phi_z;
  cert.M.block(ny + nz, ny + nz, nx, nx) =
      Matrix::Identity(nx, nx) / (tau * sigma);
  cert.M += cert.s_tau * sigma * eet;

  cert.H = Matrix::Zero(nu, nu);
  cert.H.block(0, 0, ny, ny) = cert.Hf;
  cert.H.block(ny, ny, nz, nz) = cert.Hg;
  cert.H.block(ny + nz, ny + nz, nx, nx) =
      cert.t_tau / (tau * tau * sigma) * Matrix::Identity(nx, nx);
  cert.H += 0.25 * cert.t_tau * sigma * eet;

  // spectral constants of the residual bound
  const auto s_half_sf = SelfAdjointOperator::Sum({{1.0, cfg.S}, {0.5, p.loss_f.majorizer}});
  const auto t_half_sg = SelfAdjointOperator::Sum({{1.0, cfg.T}, {0.5, p.loss_g.majorizer}});
  const double lmax_sf = lambda_max_of(p.loss_f.majorizer);
  const double lmax_sg = lambda_max_of(p.loss_g.majorizer);
  const double lmax_s_half = lambda_max_of(s_half_sf);
  const double lmax_t_half = lambda_max_of(t_half_sg);
  const double lmax_ata = lambda_max_of(SelfAdjointOperator::MapGram(p.map_A.adjoint()));
  const double lmax_btb = lambda_max_of(SelfAdjointOperator::MapGram(p.map_B.adjoint()));

  cert.kappa1 = 3.0 * std::pow(lmax_s_half + 0.5 * lmax_sf, 2);
  cert.kappa2 = std::max(2.0 * std::pow(lmax_t_half + 0.5 * lmax_sg, 2), 3.0 * sigma * lmax_ata);
  cert.kappa3 =
      1.0 / sigma + (1.0 - tau) * (1.0 - tau) * sigma * (3.0 * lmax_ata + 2.0 * lmax_btb);
  const double kmax = std::max({cert.kappa1, cert.kappa2, cert.kappa3});

  cert.H0 = Matrix::Zero(nu, nu);
  cert.H0.block(0, 0, ny, ny) = Matrix::Identity(ny, ny);
  cert.H0.block(ny, ny, nz, nz) = Matrix::Identity(nz, nz) + sigma * bbt;
  cert.H0.block(ny + nz, ny + nz, nx, nx) =
      Matrix::Identity(nx, nx) / (tau * tau * sigma);
  cert.H0 *= kmax;
  return cert;
}

bool audit_lemma31(const CertificateOperators& cert, const IterateState& u_prev,
                   const IterateState& u_next, const KktResidual& r_next, double slack) {
  const Vector du = cert.stack(u_next.y - u_prev.y, u_next.z - u_prev.z, u_next.x - u_prev.x);
  const double lhs = r_next.squared_norm();
  const double rhs = cert.h0_norm2(du);
  const double scale = std::max({1.0, lhs, rhs});
  return lhs <= rhs + slack * scale;
}

StreamAudit audit_stream(const CertificateOperators& cert, const CompositeProblem& p,
                         const std::vector<IterateState>& stream, const Vector& ybar,
                         const Vector& zbar, const Vector& xbar, double slack) {
  StreamAudit audit;
  if (stream.size() < 2) return audit;
  const double tau = cert.tau, sigma = cert.sigma;
  const double min_tt = std::min(tau, 1.0 / tau);

  auto record = [&](bool& ok, double& worst, double lhs, double rhs) {
    // inequality lhs <= rhs; normalized slack (rhs - lhs) / scale
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    const double margin = (rhs - lhs) / scale;
    worst = std::min(worst, margin);
    if (margin < -slack) ok = false;
  };

  std::vector<double> phis(stream.size());
  for (std::size_t k = 0; k < stream.size(); ++k) {
    phis[k] = cert.phi(p, stream[k], ybar, zbar, xbar);
  }

  for (std::size_t k = 0; k + 1 < stream.size(); ++k) {
    const IterateState& uk = stream[k];
    const IterateState& un = stream[k + 1];
    audit.transitions += 1;

    const KktResidual rn = kkt_residual(p, un.y, un.z, un.x);
    const Vector du = cert.stack(un.y - uk.y, un.z - uk.z, un.x - uk.x);
    record(audit.lemma31_ok, audit.lemma31_worst, rn.squared_norm(), cert.h0_norm2(du));

    const Vector dy = un.y - uk.y;
    const Vector dz = un.z - uk.z;
    const double r_next2 = un.r.squaredNorm();
    const Vector mixed =
        p.map_A.apply_adjoint(un.y) + p.map_B.apply_adjoint(uk.z) - p.rhs_c;
    // phi decrease (holds for every tau > 0 and k >= 0)
    record(audit.ineq37_ok, audit.ineq37_worst,
           dy.dot(cert.Hf * dy) + dz.dot(cert.half_g * dz) + (1.0 - tau) * sigma * r_next2 +
               sigma * mixed.squaredNorm(),
           phis[k] - phis[k + 1]);

    if (k >= 1) {
      const IterateState& up = stream[k - 1];
      const Vector hist_k = uk.z - up.z;
      const double pot_k = phis[k] + (1.0 - min_tt) * sigma * uk.r.squaredNorm() +
                           hist_k.dot(cert.SgT * hist_k);
      const double pot_n = phis[k + 1] + (1.0 - min_tt) * sigma * r_next2 +
                           dz.dot(cert.SgT * dz);
      const double tnext = dy.dot(cert.Hf * dy) + dz.dot(cert.Hg * dz);
      record(audit.ineq39_ok, audit.ineq39_worst,
             tnext + (-tau + std::min(1.0 + tau, 1.0 + 1.0 / tau)) * sigma * r_next2,
             pot_k - pot_n);

      // Lyapunov contraction with the single-point distance surrogate
      const Vector duk = cert.stack(uk.y - ybar, uk.z - zbar, uk.x - xbar);
      const Vector dun = cert.stack(un.y - ybar, un.z - zbar, un.x - xbar);
      const double vk = cert.m_norm2(duk) + hist_k.dot(cert.SgT * hist_k);
      const double vn = cert.m_norm2(dun) + dz.dot(cert.SgT * dz);
      record(audit.descent_ok, audit.descent_worst, vn + cert.h_norm2(du), vk);
      record(audit.v_monotone_ok, audit.v_worst, vn, vk);
    }
  }
  return audit;
}

GeometricFit fit_geometric(const std::vector<double>& values, int k0) {
  GeometricFit fit;
  if (values.empty()) return fit;
  const double vmax = *std::max_element(values.begin(), values.end());
  const double floor = 1e-26 * std::max(1.0, vmax);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int m = 0;
  for (std::size_t k = static_cast<std::size_t>(std::max(0, k0)); k < values.size(); ++k) {
    const double v = values[k];
    if (v <= floor) break;
    const double lx = static_cast<double>(k);
    const double ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
    ++m;
  }
  fit.points = m;
  if (m < 2) return fit;
  const double n = static_cast<double>(m);
  const double denom = n * sxx - sx * sx;
  if (denom <= 0) return fit;
  const double slope = (n * sxy - sx * sy) / denom;
  fit.ratio = std::exp(slope);
  const double ss_tot = syy - sy * sy / n;
  const double ss_res = ss_tot - slope * (sxy - sx * sy / n);
  fit.r2 = ss_tot > 1e-300 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

RateEstimate estimate_linear_rate(const CertificateOperators& cert,
                                  const std::vector<IterateState>& stream,
                                  const std::vector<double>& etas, const Vector& ybar,
                                  const Vector& zbar, const Vector& xbar) {
  RateEstimate est;
  if (stream.size() < 51) {
    throw ConfigError("estimate_linear_rate: stream too short (need >= 50 iterations)");
  }
  for (std::size_t k = 1; k < stream.size(); ++k) {
    const Vector du = cert.stack(stream[k].y - ybar, stream[k].z - zbar, stream[k].x - xbar);
    const Vector dz = stream[k].z - stream[k - 1].z;
    est.lyapunov.push_back(cert.m_norm2(du) + dz.dot(cert.SgT * dz));
  }
  // burn-in: first state whose stopping residual is below 1e-2
  std::size_t k0 = 1;
  for (std::size_t k = 0; k < etas.size(); ++k) {
    if (etas[k] < 1e-2) {
      k0 = std::max<std::size_t>(1, k);
      break;
    }
  }
  est.burn_in = static_cast<int>(k0);
  const GeometricFit fit = fit_geometric(est.lyapunov, static_cast<int>(k0) - 1);
  est.points_used = fit.points;
  if (fit.points < 10) return est;  // not enough decaying tail to fit
  est.ratio = fit.ratio;
  est.fit_r2 = fit.r2;
  est.linear = est.ratio < 1.0 - 1e-12;
  return est;
}

Lemma35Result check_lemma35(const CompositeProblem& p, const SolverConfig& cfg) {
  Lemma35Result out;
  const auto hf = SelfAdjointOperator::Sum(
      {{0.5, p.loss_f.majorizer}, {1.0, cfg.S}, {cfg.sigma, SelfAdjointOperator::MapGram(p.map_A)}});
  const auto hg = SelfAdjointOperator::Sum(
      {{0.5, p.loss_g.majorizer}, {1.0, cfg.T}, {cfg.sigma, SelfAdjointOperator::MapGram(p.map_B)}});
  out.pd_blocks = is_positive_definite(hf) && is_positive_definite(hg);
  const CertificateOperators cert = build_certificates(p, cfg);
  auto pd_dense = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double lmax = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    return es.eigenvalues().minCoeff() > 1e-10 * lmax;
  };
  out.pd_H = pd_dense(cert.H);
  out.pd_M = pd_dense(cert.M);
  return out;
}

}  // namespace madmm
