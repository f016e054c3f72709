#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <madmm/losses.hpp>

#include "test_support.hpp"

using namespace madmm;
using testsup::random_matrix;
using testsup::random_vector;

namespace {

LogisticData make_data(Rng& rng, Index n_samples, Index n_features, double density = 1.0) {
  Matrix b(n_features, n_samples);
  for (Index j = 0; j < n_samples; ++j) {
    for (Index i = 0; i < n_features; ++i) {
      b(i, j) = rng.uniform() < density ? rng.normal() : 0.0;
    }
  }
  Vector labels(n_samples);
  for (Index j = 0; j < n_samples; ++j) labels[j] = rng.uniform() < 0.5 ? 1.0 : -1.0;
  return LogisticData(b.sparseView(), labels);
}

// high-precision reference: per-sample terms in long double, summed with
// compensation in ascending magnitude order
double logistic_value_reference(const LogisticData& data, const Vector& ytilde) {
  const Vector t = data.margins(ytilde);
  std::vector<long double> terms(static_cast<std::size_t>(t.size()));
  for (Index i = 0; i < t.size(); ++i) {
    const long double ti = t[i];
    terms[static_cast<std::size_t>(i)] =
        std::max<long double>(ti, 0.0L) + std::log1p(std::exp(-std::abs(ti)));
  }
  std::sort(terms.begin(), terms.end());
  long double sum = 0.0L, comp = 0.0L;
  for (long double x : terms) {
    const long double y = x - comp;
    const long double tmp = sum + y;
    comp = (tmp - sum) - y;
    sum = tmp;
  }
  return static_cast<double>(sum / static_cast<long double>(data.num_samples()));
}

}  // namespace

TEST_CASE("logistic_value") {
  Rng rng(31);
  SUBCASE("zero point evaluates to log 2") {
    const auto data = make_data(rng, 17, 5);
    CHECK(logistic_value(data, Vector::Zero(6)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("decays to zero and stays finite along a separating direction") {
    Matrix b(2, 1);
    b << 1, 0;
    Vector label(1);
    label << 1;
    const LogisticData data(b.sparseView(), label);
    Vector dir(3);
    dir << 1, 0, 0;  // A_1' dir = -1
    double prev = logistic_value(data, Vector::Zero(3));
    for (double s : {1.0, 5.0, 20.0, 100.0, 500.0, 5000.0}) {
      const double val = logistic_value(data, Vector(s * dir));
      CHECK(std::isfinite(val));
      CHECK(val <= prev + 1e-15);
      prev = val;
    }
    CHECK(prev <= 1e-100);
    // the opposite direction grows linearly but never overflows
    CHECK(std::isfinite(logistic_value(data, Vector(-5000.0 * dir))));
  }
  SUBCASE("matches the high-precision summation oracle") {
    for (int rep = 0; rep < 10; ++rep) {
      const auto data = make_data(rng, 60, 12);
      const Vector y = random_vector(rng, 13, 3.0);
      const double ref = logistic_value_reference(data, y);
      CHECK(logistic_value(data, y) == doctest::Approx(ref).epsilon(1e-13));
    }
  }
}

TEST_CASE("logistic_gradient") {
  Rng rng(32);
  SUBCASE("value at zero is the half-averaged sample sum") {
    const auto data = make_data(rng, 9, 4);
    const Vector got = logistic_gradient(data, Vector::Zero(5));
    Vector expect = Vector::Zero(5);
    for (Index j = 0; j < 9; ++j) expect += Vector(data.sample_matrix().col(j));
    expect /= 2.0 * 9.0;
    CHECK((got - expect).norm() <= 1e-14 * (1.0 + expect.norm()));
  }
  SUBCASE("central finite differences") {
    const auto data = make_data(rng, 25, 6);
    for (int rep = 0; rep < 5; ++rep) {
      const Vector y = random_vector(rng, 7);
      const Vector g = logistic_gradient(data, y);
      const double h = 1e-6;
      for (Index i = 0; i < 7; ++i) {
        Vector e = Vector::Zero(7);
        e[i] = h;
        const double fd = (logistic_value(data, y + e) - logistic_value(data, y - e)) / (2 * h);
        CHECK(std::abs(g[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
  SUBCASE("duplicating the dataset leaves the gradient unchanged") {
    const auto data = make_data(rng, 11, 4);
    Matrix b2(4, 22);
    b2 << Matrix(data.features()), Matrix(data.features());
    Vector l2(22);
    l2 << data.labels(), data.labels();
    const LogisticData doubled(b2.sparseView(), l2);
    const Vector y = random_vector(rng, 5);
    CHECK((logistic_gradient(data, y) - logistic_gradient(doubled, y)).norm() <= 1e-15);
  }
  SUBCASE("convexity: gradient monotonicity") {
    const auto data = make_data(rng, 30, 8);
    for (int rep = 0; rep < 50; ++rep) {
      const Vector u = random_vector(rng, 9, 2.0);
      const Vector v = random_vector(rng, 9, 2.0);
      CHECK((logistic_gradient(data, u) - logistic_gradient(data, v)).dot(u - v) >= -1e-12);
    }
  }
}

TEST_CASE("logistic_majorizer") {
  Rng rng(33);
  SUBCASE("single-sample formula instance") {
    Matrix b(1, 1);
    b << 1;
    Vector label(1);
    label << -1;  // A_1 = [1; 1]
    const LogisticData data(b.sparseView(), label);
    const Matrix got = logistic_majorizer(data).materialize();
    Matrix expect(2, 2);
    expect << 0.25, 0.25, 0.25, 0.25;
    CHECK((got - expect).norm() <= 1e-15);
  }
  SUBCASE("Gram operator is positive semidefinite") {
    const auto data = make_data(rng, 14, 6);
    const auto op = logistic_majorizer(data);
    for (int rep = 0; rep < 100; ++rep) {
      CHECK(op.quadratic_form(random_vector(rng, 7)) >= -1e-12);
    }
  }
  SUBCASE("majorization inequality holds on random pairs") {
    for (int ds = 0; ds < 5; ++ds) {
      const auto data = make_data(rng, 40, 10);
      const auto sigma_hat = logistic_majorizer(data);
      for (int rep = 0; rep < 200; ++rep) {
        const Vector y = random_vector(rng, 11, 2.0);
        const Vector yp = random_vector(rng, 11, 2.0);
        const Vector d = y - yp;
        const double lhs = logistic_value(data, y);
        const double rhs = logistic_value(data, yp) + logistic_gradient(data, yp).dot(d) +
                           0.5 * sigma_hat.quadratic_form(d);
        CHECK(lhs <= rhs + 1e-10 * std::max(1.0, std::abs(rhs)));
      }
    }
  }
  SUBCASE("Hessian dominance via directional differences of the gradient") {
    const auto data = make_data(rng, 30, 7);
    const auto sigma_hat = logistic_majorizer(data);
    for (int rep = 0; rep < 40; ++rep) {
      const Vector y = random_vector(rng, 8);
      const Vector v = random_vector(rng, 8);
      const double h = 1e-5;
      const Vector dg =
          (logistic_gradient(data, y + h * v) - logistic_gradient(data, y - h * v)) / (2 * h);
      CHECK(v.dot(dg) <= sigma_hat.quadratic_form(v) + 1e-6);
    }
  }
}

TEST_CASE("lowrank_majorizer") {
  Rng rng(34);
  const auto data = make_data(rng, 10, 6);
  const Matrix a = Matrix(data.sample_matrix());
  SUBCASE("full rank, unscaled, reconstructs the Gram matrix") {
    const Index k = std::min<Index>(7, 10);
    const Matrix got = lowrank_majorizer(data, k, MajorizerScaling::Unscaled).materialize();
    CHECK((got - a * a.transpose()).norm() <= 1e-10 * (1.0 + a.squaredNorm()));
  }
  SUBCASE("consistent scaling divides by 4N") {
    const Matrix got = lowrank_majorizer(data, 7).materialize();
    CHECK((got - a * a.transpose() / 40.0).norm() <= 1e-11 * (1.0 + a.squaredNorm()));
  }
  SUBCASE("rank-3 truncation matches the dense SVD oracle") {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
    Matrix best = Matrix::Zero(7, 7);
    for (int i = 0; i < 3; ++i) {
      const double mu = svd.singularValues()[i] * svd.singularValues()[i];
      best += mu * svd.matrixU().col(i) * svd.matrixU().col(i).transpose();
    }
    const Matrix got = lowrank_majorizer(data, 3, MajorizerScaling::Unscaled).materialize();
    CHECK((got - best).norm() <= 1e-9 * (1.0 + best.norm()));
  }
  SUBCASE("out-of-range K rejected") {
    CHECK_THROWS_AS(lowrank_majorizer(data, 0), InputError);
    CHECK_THROWS_AS(lowrank_majorizer(data, 100), InputError);
  }
}

TEST_CASE("quadratic loss") {
  Rng rng(35);
  SUBCASE("identity curvature") {
    auto loss = SmoothLoss::Quadratic(SelfAdjointOperator::Identity(2), Vector::Zero(2));
    Vector v(2);
    v << 1, 1;
    CHECK(loss.value(v) == doctest::Approx(1.0));
    CHECK((loss.gradient(v) - v).norm() == 0.0);
  }
  SUBCASE("linear case has zero majorizer") {
    Vector e1(3);
    e1 << 1, 0, 0;
    auto loss = SmoothLoss::Quadratic(SelfAdjointOperator::Zero(3), e1);
    const Vector v = random_vector(rng, 3);
    CHECK(loss.value(v) == doctest::Approx(v[0]));
    CHECK(loss.majorizer.apply(v).norm() == 0.0);
  }
  SUBCASE("quadratic majorization is exact") {
    const Matrix g = random_matrix(rng, 4, 4);
    auto q = SelfAdjointOperator::FromDense(Matrix(g * g.transpose()));
    auto loss = SmoothLoss::Quadratic(q, random_vector(rng, 4));
    for (int rep = 0; rep < 20; ++rep) {
      const Vector y = random_vector(rng, 4);
      const Vector yp = random_vector(rng, 4);
      const double lhs = loss.value(y);
      const double rhs = loss.value(yp) + loss.gradient(yp).dot(y - yp) +
                         0.5 * loss.majorizer.quadratic_form(y - yp);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
  SUBCASE("indefinite curvature is rejected") {
    Vector d(2);
    d << 1, -1;
    CHECK_THROWS_AS(SmoothLoss::Quadratic(SelfAdjointOperator::FromDiagonal(d), Vector::Zero(2)),
                    ConfigError);
  }
}
