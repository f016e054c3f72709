#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
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

std::vector<Vector> capture_states(const CompositeProblem& p, const SolverConfig& cfg,
                                   const ResidualFn& residual, int iters) {
  SolverConfig run = cfg;
  run.tol = 1e-30;
  run.max_iter = iters;
  std::vector<Vector> states;
  SolveOptions opt;
  opt.residual = residual;
  opt.record_trace = false;
  opt.observer = [&](const IterateState& s) {
    Vector u(s.y.size() + s.z.size() + s.x.size());
    u << s.y, s.z, s.x;
    states.push_back(u);
  };
  solve(p, run, IterateState::zeros(p), opt);
  return states;
}

}  // namespace

TEST_CASE("fused-Lasso logistic builder") {
  Rng rng(71);
  const Index n = 9, N = 14;
  const auto data = small_data(rng, N, n);

  SUBCASE("lambda2 = 0 reproduces a plain Lasso build exactly") {
    auto fused = build_fused_lasso_logistic(data, 0.07, 0.0, 1.0, 1e-6, VariantKind::IPADMM);
    auto lasso = fused;
    lasso.problem.prox_q = ProxOperator::L1(0.07);
    const auto s1 = capture_states(fused.problem, fused.config, fused.residual, 25);
    const auto s2 = capture_states(lasso.problem, lasso.config, fused.residual, 25);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t k = 0; k < s1.size(); ++k) {
      CHECK((s1[k] - s2[k]).norm() == 0.0);  // bitwise identical paths
    }
  }
  SUBCASE("semidefinite variant keeps only the intercept remainder") {
    auto model = build_fused_lasso_logistic(data, 0.1, 0.05, 1.7, 1e-6, VariantKind::SPADMM);
    const Matrix s = model.config.S.materialize();
    Matrix expect = Matrix::Zero(n + 1, n + 1);
    expect(n, n) = 1.7 * 1e-6;
    CHECK((s - expect).norm() == 0.0);
  }
  SUBCASE("one hand-stepped iteration of the dual scheme") {
    const double sigma = 1.3, tau = 1.618, l1 = 0.08, l2 = 0.05, r = 1e-6;
    auto model = build_fused_lasso_logistic(data, l1, l2, sigma, r, VariantKind::IPADMM);
    const auto states = capture_states(model.problem, model.config, model.residual, 1);
    REQUIRE(states.size() == 2);

    const Matrix sigma_hat = logistic_majorizer(data).materialize();
    Vector wdiag = Vector::Constant(n + 1, sigma);
    wdiag[n] = sigma * r;
    const Matrix w = 0.5 * sigma_hat + Matrix(wdiag.asDiagonal());
    const Vector y0 = Vector::Zero(n + 1), z0 = Vector::Zero(n), x0 = Vector::Zero(n);
    Vector rhs = 0.5 * sigma_hat * y0 - logistic_gradient(data, y0);
    rhs[n] += sigma * r * y0[n];
    rhs.head(n) += -x0 + sigma * z0;
    const Vector y1 = w.ldlt().solve(rhs);
    const Vector z1 = fused_lasso_prox(y1.head(n) + x0 / sigma, l1 / sigma, l2 / sigma);
    const Vector x1 = x0 + tau * sigma * (y1.head(n) - z1);
    Vector expect(n + 1 + n + n);
    expect << y1, z1, x1;
    CHECK((states[1] - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("model-specific residual components") {
    const Vector y = random_vector(rng, n + 1);
    const Vector z = random_vector(rng, n);
    const Vector x = random_vector(rng, n);
    const auto got = residual_fused(data, 0.1, 0.04, y, z, x);
    const Vector grad = logistic_gradient(data, y);
    Vector gplus = grad;
    gplus.head(n) += x;
    CHECK(got.eta_P ==
          doctest::Approx((y.head(n) - z).norm() / (1.0 + y.head(n).norm() + z.norm())));
    CHECK(got.eta_D == doctest::Approx(gplus.norm() / (1.0 + grad.norm() + x.norm())));
    const Vector pz = fused_lasso_prox(x + z, 0.1, 0.04);
    CHECK(got.eta_C == doctest::Approx((z - pz).norm() / (1.0 + x.norm() + z.norm())));
    CHECK(got.eta == std::max({got.eta_P, got.eta_D, got.eta_C}));
    const auto feas = residual_fused(data, 0.1, 0.04, y, y.head(n), x);
    CHECK(feas.eta_P == 0.0);
  }
  SUBCASE("residual is below tolerance at an accepted solution") {
    const double lambda = lambda_from_gamma(data, 0.1);
    auto model =
        build_fused_lasso_logistic(data, lambda, lambda, 1.0, 1e-6, VariantKind::IPADMM, 1e-7);
    SolveOptions opt;
    opt.residual = model.residual;
    const auto res = solve(model.problem, model.config, IterateState::zeros(model.problem), opt);
    REQUIRE(res.status == SolveStatus::Converged);
    const auto eta = residual_fused(data, lambda, lambda, res.state.y, res.state.z, res.state.x);
    CHECK(eta.eta < 1e-7);
  }
}

TEST_CASE("constrained logistic builder") {
  Rng rng(72);
  const Index n = 6, N = 10, m = 3;
  const auto data = small_data(rng, N, n);
  const Matrix D = random_matrix(rng, m, n);
  const Vector d = random_vector(rng, m);

  SUBCASE("empty constraint block collapses to the Lasso model") {
    const Matrix d0(0, n);
    const Vector dv(0);
    auto con = build_constrained_logistic(data, d0, dv, 0.09, 1.0, 1e-6, VariantKind::IPADMM);
    auto lasso = build_fused_lasso_logistic(data, 0.09, 0.0, 1.0, 1e-6, VariantKind::IPADMM);
    const auto s1 = capture_states(con.problem, con.config, con.residual, 20);
    const auto s2 = capture_states(lasso.problem, lasso.config, lasso.residual, 20);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t k = 0; k < s1.size(); ++k) {
      // with m = 0 the (u, xi) blocks are empty, so the state layouts agree
      CHECK((s1[k] - s2[k]).lpNorm<Eigen::Infinity>() <= 1e-13);
    }
  }
  SUBCASE("one hand-stepped iteration of the constrained scheme") {
    const double sigma = 1.1, tau = 1.618, lambda = 0.07, r = 1e-6;
    auto model = build_constrained_logistic(data, D, d, lambda, sigma, r, VariantKind::IPADMM);
    model.config.tau = tau;
    const auto states = capture_states(model.problem, model.config, model.residual, 1);
    REQUIRE(states.size() == 2);

    const Matrix sigma_hat = logistic_majorizer(data).materialize();
    Matrix gram = Matrix::Zero(n + 1, n + 1);
    gram.topLeftCorner(n, n) = D.transpose() * D + Matrix::Identity(n, n);
    Matrix w = 0.5 * sigma_hat + sigma * gram;
    w(n, n) += sigma * r;
    const Vector y0 = Vector::Zero(n + 1);
    const Vector u0 = Vector::Zero(m), v0 = Vector::Zero(n);
    const Vector xi0 = Vector::Zero(m), zeta0 = Vector::Zero(n);
    Vector rhs = -logistic_gradient(data, y0);
    rhs.head(n) += -(D.transpose() * xi0 + zeta0) + sigma * (D.transpose() * (u0 + d) + v0);
    const Vector y1 = w.ldlt().solve(rhs);
    const Vector u1 = (D * y1.head(n) - d + xi0 / sigma).cwiseMax(0.0);
    const Vector v1 = soft_threshold(y1.head(n) + zeta0 / sigma, lambda / sigma);
    const Vector xi1 = xi0 + tau * sigma * (D * y1.head(n) - u1 - d);
    const Vector zeta1 = zeta0 + tau * sigma * (y1.head(n) - v1);
    Vector expect(n + 1 + m + n + m + n);
    expect << y1, u1, v1, xi1, zeta1;
    CHECK((states[1] - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("L-variant replaces the structured majorizer by its top eigenvalue") {
    auto model = build_constrained_logistic(data, D, d, 0.05, 1.0, 1e-6, VariantKind::LIPADMM);
    const double lmax = max_eigenvalue(logistic_majorizer(data), 1e-10).value;
    const Matrix got = model.problem.loss_f.majorizer.materialize();
    CHECK((got - lmax * Matrix::Identity(n + 1, n + 1)).norm() <= 1e-8);
    Matrix sexp = -0.5 * lmax * Matrix::Identity(n + 1, n + 1);
    sexp(n, n) += 1e-6;
    CHECK((model.config.S.materialize() - sexp).norm() <= 1e-8);
  }
  SUBCASE("residual components and feasibility at convergence") {
    const double lambda = lambda_from_gamma(data, 0.1);
    auto model = build_constrained_logistic(data, D, d, lambda, 1.0, 1e-6, VariantKind::IPADMM,
                                            1e-6, 50000);
    SolveOptions opt;
    opt.residual = model.residual;
    const auto res = solve(model.problem, model.config, IterateState::zeros(model.problem), opt);
    REQUIRE(res.status == SolveStatus::Converged);
    const Vector y = res.state.y.head(n);
    const Vector u = res.state.z.head(m);
    const Vector v = res.state.z.tail(n);
    CHECK((D * y - u - d).norm() / (1.0 + (D * y).norm() + u.norm() + d.norm()) < 1e-6);
    CHECK((y - v).norm() / (1.0 + y.norm() + v.norm()) < 1e-6);
    CHECK(u.minCoeff() >= 0.0);  // projection output is exactly feasible

    Vector z_feas(m + n);
    z_feas << D * y - d, y;
    const auto eta = residual_constrained(data, D, d, lambda, res.state.y, z_feas, res.state.x);
    CHECK(eta.eta_P == 0.0);
  }
}

TEST_CASE("lambda_from_gamma") {
  SUBCASE("worked 2x2 example") {
    Matrix b = Matrix::Identity(2, 2);
    Vector labels(2);
    labels << 1, -1;
    const LogisticData data(b.sparseView(), labels);
    CHECK(lambda_from_gamma(data, 0.5) == doctest::Approx(0.25));
    const LogisticData flipped(b.sparseView(), Vector(-labels));
    CHECK(lambda_from_gamma(flipped, 0.5) == doctest::Approx(0.25));
  }
  SUBCASE("matches a dense evaluation on random data") {
    Rng rng(73);
    const auto data = small_data(rng, 17, 8);
    const Matrix b = Matrix(data.features());
    const double expect = 0.3 * (b * data.labels()).cwiseAbs().maxCoeff() / 17.0;
    CHECK(lambda_from_gamma(data, 0.3) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("gamma range is enforced") {
    Rng rng(74);
    const auto data = small_data(rng, 5, 3);
    CHECK_THROWS_AS(lambda_from_gamma(data, 0.0), ConfigError);
    CHECK_THROWS_AS(lambda_from_gamma(data, 1.0), ConfigError);
  }
}

TEST_CASE("builders enforce the admissibility conditions at build time") {
  Rng rng(75);
  const auto data = small_data(rng, 12, 6);
  for (auto kind :
       {VariantKind::IPADMM, VariantKind::SPADMM, VariantKind::LIPADMM, VariantKind::LSPADMM}) {
    CHECK_NOTHROW(build_fused_lasso_logistic(data, 0.1, 0.05, 1.0, 1e-6, kind));
  }
  // a nonpositive remainder leaves the intercept coordinate with no curvature
  CHECK_THROWS_AS(build_fused_lasso_logistic(data, 0.1, 0.0, 1.0, 0.0, VariantKind::IPADMM),
                  ConfigError);
}
