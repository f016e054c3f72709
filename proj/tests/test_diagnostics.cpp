#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <madmm/diagnostics.hpp>
#include <madmm/problems.hpp>

#include "test_support.hpp"

using namespace madmm;
using testsup::random_matrix;
using testsup::random_vector;

namespace {

LogisticData small_data(Rng& rng, Index n_samples, Index n_features) {
  Matrix b = random_matrix(rng, n_features, n_samples);
  Vector labels(n_samples);
  for (Index j = 0; j < n_samples; ++j) labels[j] = rng.uniform() < 0.5 ? 1.0 : -1.0;
  return LogisticData(b.sparseView(), labels);
}

struct RunCapture {
  std::vector<IterateState> stream;
  std::vector<double> etas;
};

RunCapture run_and_capture(const CompositeProblem& p, const SolverConfig& cfg,
                           const ResidualFn& residual, IterateState start) {
  RunCapture cap;
  SolveOptions opt;
  opt.residual = residual;
  opt.record_trace = false;
  opt.observer = [&](const IterateState& s) {
    cap.stream.push_back(s);
    cap.etas.push_back(residual(p, s.y, s.z, s.x).eta);
  };
  solve(p, cfg, std::move(start), opt);
  return cap;
}

// high-accuracy reference point: semidefinite variant, near machine tolerance
IterateState presolve_reference(const LogisticData& data, double lambda1, double lambda2,
                                double sigma) {
  auto ref = build_fused_lasso_logistic(data, lambda1, lambda2, sigma, 1e-6,
                                        VariantKind::SPADMM, 1e-11, 400000);
  SolveOptions opt;
  opt.residual = ref.residual;
  opt.record_trace = false;
  auto res = solve(ref.problem, ref.config, IterateState::zeros(ref.problem), opt);
  return res.state;
}

}  // namespace

TEST_CASE("tau_constants") {
  SUBCASE("unit step") {
    const auto tc = tau_constants(1.0);
    CHECK(tc.s_tau == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(tc.t_tau == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("golden ratio zeroes the t constant") {
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    CHECK(std::abs(tau_constants(golden).t_tau) <= 1e-12);
  }
  SUBCASE("protocol value 1.618") {
    const auto tc = tau_constants(1.618);
    CHECK(tc.s_tau == doctest::Approx(0.38197).epsilon(1e-4));
    // direct formula cross-check at 1e-8
    const double m = 1.0 / 1.618;
    CHECK(std::abs(tc.s_tau - (5.0 - 1.618 - 3.0 * m) / 4.0) <= 1e-8);
    CHECK(std::abs(tc.t_tau - (1.0 - 1.618 + m) / 2.0) <= 1e-8);
    CHECK(tc.t_tau == doctest::Approx(2.3485785e-5).epsilon(1e-4));
  }
  SUBCASE("sign of t over a 1000-point grid") {
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    for (int i = 1; i <= 1000; ++i) {
      const double tau = golden * i / 1000.0 - 1e-9;
      if (tau <= 0) continue;
      CHECK(tau_constants(tau).t_tau > 0.0);
    }
    for (double tau : {golden + 1e-6, 1.7, 2.0, 5.0}) {
      CHECK(tau_constants(tau).t_tau <= 0.0);
    }
    CHECK_THROWS_AS(tau_constants(0.0), ConfigError);
  }
}

TEST_CASE("build_certificates") {
  SUBCASE("scalar toy hand assembly") {
    // zero losses, identity couplings, sigma = tau = 1
    CompositeProblem p;
    p.loss_f = SmoothLoss::Zero(1);
    p.loss_g = SmoothLoss::Zero(1);
    p.prox_p = ProxOperator::Zero();
    p.prox_q = ProxOperator::Zero();
    p.map_A = LinearMap::Identity(1);
    p.map_B = LinearMap::Identity(1);
    p.rhs_c = Vector::Zero(1);
    SolverConfig cfg;
    cfg.sigma = 1.0;
    cfg.tau = 1.0;
    cfg.S = SelfAdjointOperator::Zero(1);
    cfg.T = SelfAdjointOperator::Zero(1);
    const auto cert = build_certificates(p, cfg);
    Matrix expected(3, 3);
    expected << 0, 0, 0, 0, 1, 0, 0, 0, 1;
    Matrix eet(3, 3);
    eet << 1, 1, 0, 1, 1, 0, 0, 0, 0;
    expected += 0.25 * eet;  // s_tau = 1/4 at tau = 1
    CHECK((cert.M - expected).norm() <= 1e-12);
    CHECK(cert.kappa3 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cert.s_tau == doctest::Approx(0.25));
    CHECK(cert.t_tau == doctest::Approx(0.5));
  }
  SUBCASE("tau = 1 removes the step-length penalty from kappa3") {
    Rng rng(61);
    const auto data = small_data(rng, 10, 4);
    auto model = build_fused_lasso_logistic(data, 0.1, 0.05, 1.7, 1e-6, VariantKind::SPADMM);
    model.config.tau = 1.0;
    const auto cert = build_certificates(model.problem, model.config);
    CHECK(cert.kappa3 == doctest::Approx(1.0 / 1.7).epsilon(1e-9));
  }
  SUBCASE("dimension cap") {
    CompositeProblem p;
    p.loss_f = SmoothLoss::Zero(3000);
    p.loss_g = SmoothLoss::Zero(3000);
    p.map_A = LinearMap::Identity(3000);
    p.map_B = LinearMap::Identity(3000);
    p.rhs_c = Vector::Zero(3000);
    SolverConfig cfg;
    cfg.S = SelfAdjointOperator::Zero(3000);
    cfg.T = SelfAdjointOperator::Zero(3000);
    CHECK_THROWS_AS(build_certificates(p, cfg), ConfigError);
  }
}

TEST_CASE("positive definiteness equivalence") {
  Rng rng(62);
  int pd_cases = 0, npd_cases = 0;
  for (int inst = 0; inst < 60; ++inst) {
    const Index ny = 2 + static_cast<Index>(rng.below(4));
    const Index nz = 2 + static_cast<Index>(rng.below(3));
    const Index nx = 1 + static_cast<Index>(rng.below(6));
    CompositeProblem p;
    const Matrix uf = random_matrix(rng, ny, 2);
    const Matrix ug = random_matrix(rng, nz, 2);
    p.loss_f = SmoothLoss::Quadratic(SelfAdjointOperator::Gram(uf, 1.0), Vector::Zero(ny));
    p.loss_g = SmoothLoss::Quadratic(SelfAdjointOperator::Gram(ug, 1.0), Vector::Zero(nz));
    p.map_A = LinearMap::FromDense(random_matrix(rng, ny, nx));
    p.map_B = LinearMap::FromDense(random_matrix(rng, nz, nx));
    p.rhs_c = Vector::Zero(nx);
    SolverConfig cfg;
    cfg.sigma = 0.5 + rng.uniform();
    cfg.tau = 0.3 + 1.2 * rng.uniform();
    // most indefinite admissible terms plus a varying shift; a vanishing
    // shift with a short map creates genuinely non-PD instances while the
    // admissibility bound S >= -1/2 Sigma_hat always holds
    const double dy = rng.uniform() < 0.5 ? 0.0 : 0.4 * rng.uniform();
    const double dz2 = rng.uniform() < 0.5 ? 0.0 : 0.4 * rng.uniform();
    cfg.S = SelfAdjointOperator::Sum(
        {{-0.5, p.loss_f.majorizer}, {1.0, SelfAdjointOperator::Identity(ny, dy)}});
    cfg.T = SelfAdjointOperator::Sum(
        {{-0.5, p.loss_g.majorizer}, {1.0, SelfAdjointOperator::Identity(nz, dz2)}});
    const auto res = check_lemma35(p, cfg);
    CHECK(res.pd_blocks == res.pd_H);  // equivalence
    if (res.pd_H) CHECK(res.pd_M);     // implication
    (res.pd_blocks ? pd_cases : npd_cases) += 1;
  }
  CHECK(pd_cases > 0);
  CHECK(npd_cases > 0);
  SUBCASE("boundary scalar instance") {
    CompositeProblem p;
    p.loss_f = SmoothLoss::Quadratic(SelfAdjointOperator::Identity(1), Vector::Zero(1));
    p.loss_g = SmoothLoss::Quadratic(SelfAdjointOperator::Identity(1), Vector::Zero(1));
    p.map_A = LinearMap::Zero(1, 1);
    p.map_B = LinearMap::Identity(1);
    p.rhs_c = Vector::Zero(1);
    SolverConfig cfg;
    cfg.S = SelfAdjointOperator::Identity(1, -0.5);  // 1/2 Sigma_f + S + 0 = 0
    cfg.T = SelfAdjointOperator::Zero(1);
    const auto res = check_lemma35(p, cfg);
    CHECK_FALSE(res.pd_blocks);
    CHECK_FALSE(res.pd_H);
  }
}

TEST_CASE("stream audits on a converged Lasso run") {
  Rng rng(63);
  const auto data = small_data(rng, 30, 12);
  const double lambda = lambda_from_gamma(data, 0.05);
  const IterateState ref = presolve_reference(data, lambda, 0.0, 1.0);

  auto model = build_fused_lasso_logistic(data, lambda, 0.0, 1.0, 1e-6, VariantKind::IPADMM,
                                          1e-8, 50000);
  const auto cap = run_and_capture(model.problem, model.config, model.residual,
                                   IterateState::zeros(model.problem));
  REQUIRE(cap.stream.size() >= 50);
  const auto cert = build_certificates(model.problem, model.config);

  SUBCASE("residual bound and one-step inequalities hold along the run") {
    const auto audit = audit_stream(cert, model.problem, cap.stream, ref.y, ref.z, ref.x);
    CHECK(audit.lemma31_ok);
    CHECK(audit.descent_ok);
    CHECK(audit.ineq37_ok);
    CHECK(audit.ineq39_ok);
    CHECK(audit.v_monotone_ok);
    CHECK(audit.transitions + 1 == static_cast<int>(cap.stream.size()));
  }
  SUBCASE("single-transition audit helper") {
    const auto& prev = cap.stream[cap.stream.size() - 2];
    const auto& next = cap.stream.back();
    const auto rn = kkt_residual(model.problem, next.y, next.z, next.x);
    CHECK(audit_lemma31(cert, prev, next, rn));
    // equal states at a KKT point: both sides vanish
    IterateState fixed = ref;
    const auto rfix = kkt_residual(model.problem, ref.y, ref.z, ref.x);
    CHECK(audit_lemma31(cert, fixed, fixed, rfix));
  }
  SUBCASE("corrupting the residual-bound operator is detected") {
    auto bad = cert;
    bad.H0 *= 1e-6;
    bool violated = false;
    for (std::size_t k = 0; k + 1 < cap.stream.size() && !violated; ++k) {
      const auto rn = kkt_residual(model.problem, cap.stream[k + 1].y, cap.stream[k + 1].z,
                                   cap.stream[k + 1].x);
      violated = !audit_lemma31(bad, cap.stream[k], cap.stream[k + 1], rn);
    }
    CHECK(violated);
  }
  SUBCASE("trivial stream passes") {
    const std::vector<IterateState> single = {cap.stream.front()};
    const auto audit = audit_stream(cert, model.problem, single, ref.y, ref.z, ref.x);
    CHECK(audit.transitions == 0);
    CHECK(audit.descent_ok);
  }
  SUBCASE("empirical contraction of the Lyapunov pair") {
    const auto rate = estimate_linear_rate(cert, cap.stream, cap.etas, ref.y, ref.z, ref.x);
    CHECK(rate.linear);
    CHECK(rate.ratio < 1.0);
    CHECK(rate.fit_r2 >= 0.95);
    CHECK(rate.points_used >= 10);
  }
}

TEST_CASE("fit_geometric") {
  SUBCASE("exact geometric data") {
    std::vector<double> v;
    double x = 3.0;
    for (int k = 0; k < 200; ++k) {
      v.push_back(x);
      x *= 0.9;
    }
    const auto fit = fit_geometric(v);
    CHECK(std::abs(fit.ratio - 0.9) <= 1e-6);
    CHECK(fit.r2 >= 0.999999);
  }
  SUBCASE("constant data is flagged non-contracting") {
    const std::vector<double> v(100, 2.5);
    const auto fit = fit_geometric(v);
    CHECK(fit.ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("out-of-range step length is auditable, not an error") {
  Rng rng(64);
  const auto data = small_data(rng, 20, 8);
  const double lambda = lambda_from_gamma(data, 0.1);
  const IterateState ref = presolve_reference(data, lambda, 0.0, 1.0);

  auto model =
      build_fused_lasso_logistic(data, lambda, 0.0, 1.0, 1e-6, VariantKind::SPADMM, 1e-9, 300);
  model.config.tau = 1.9;  // beyond (1+sqrt(5))/2
  model.config.allow_wide_tau = true;
  const auto cap = run_and_capture(model.problem, model.config, model.residual,
                                   IterateState::zeros(model.problem));
  const auto cert = build_certificates(model.problem, model.config);
  CHECK(cert.t_tau < 0.0);
  const auto audit = audit_stream(cert, model.problem, cap.stream, ref.y, ref.z, ref.x);
  // the phi decrease bound holds for every positive step length,
  // and the residual bound never uses the step-length restriction
  CHECK(audit.ineq37_ok);
  CHECK(audit.lemma31_ok);
  // contraction statements are outside their hypotheses here; they may fail
  // and that is an expected regime, not a test failure
  WARN_MESSAGE(audit.descent_ok, "contraction audit outside the admissible range");
}
