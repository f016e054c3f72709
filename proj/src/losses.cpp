#include "madmm/losses.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

namespace madmm {

SmoothLoss SmoothLoss::Zero(Index dim) {
  SmoothLoss loss;
  loss.dim = dim;
  loss.value = [](const Vector&) { return 0.0; };
  loss.gradient = [dim](const Vector&) { return Vector::Zero(dim); };
  loss.majorizer = SelfAdjointOperator::Zero(dim);
  loss.lower_curvature = SelfAdjointOperator::Zero(dim);
  return loss;
}

SmoothLoss SmoothLoss::Quadratic(SelfAdjointOperator q, Vector d) {
  require_dim(d.size(), q.dim(), "SmoothLoss::Quadratic");
  if (q.dim() <= 500 && q.dim() > 0 && min_eigenvalue_dense(q) < -1e-9) {
    // PSD gate on small dims; larger operators are trusted by construction
    throw ConfigError("SmoothLoss::Quadratic: Q is not positive semidefinite");
  }
  SmoothLoss loss;
  loss.dim = q.dim();
  auto qe = std::make_shared<SelfAdjointOperator>(std::move(q));
  auto de = std::make_shared<Vector>(std::move(d));
  loss.value = [qe, de](const Vector& v) { return 0.5 * qe->quadratic_form(v) + de->dot(v); };
  loss.gradient = [qe, de](const Vector& v) -> Vector { return qe->apply(v) + *de; };
  loss.majorizer = *qe;
  loss.lower_curvature = *qe;
  return loss;
}

LogisticData::LogisticData(SparseMatrix features, Vector labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  require_dim(features_.cols(), labels_.size(), "LogisticData");
  if (labels_.size() == 0) throw InputError("LogisticData: empty dataset");
  for (Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0) {
      throw InputError("LogisticData: labels must be -1 or +1");
    }
  }
  // A_i = [-b_i B_i; -b_i]
  const Index n = features_.rows();
  const Index N = features_.cols();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(features_.nonZeros() + N));
  for (Index j = 0; j < N; ++j) {
    for (SparseMatrix::InnerIterator it(features_, j); it; ++it) {
      trip.emplace_back(it.row(), j, -labels_[j] * it.value());
    }
    trip.emplace_back(n, j, -labels_[j]);
  }
  a_.resize(n + 1, N);
  a_.setFromTriplets(trip.begin(), trip.end());
}

Vector LogisticData::margins(const Vector& ytilde) const {
  require_dim(ytilde.size(), ydim(), "LogisticData::margins");
  return a_.transpose() * ytilde;
}

Vector LogisticData::apply_sample_matrix(const Vector& s) const {
  require_dim(s.size(), num_samples(), "LogisticData::apply_sample_matrix");
  return a_ * s;
}

namespace {

// log(1 + exp(t)) without overflow
double log1p_exp(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

// exp(t) / (1 + exp(t)) without overflow
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double logistic_value(const LogisticData& data, const Vector& ytilde) {
  const Vector t = data.margins(ytilde);
  double sum = 0.0;
  for (Index i = 0; i < t.size(); ++i) sum += log1p_exp(t[i]);
  return sum / static_cast<double>(data.num_samples());
}

Vector logistic_gradient(const LogisticData& data, const Vector& ytilde) {
  const Vector t = data.margins(ytilde);
  Vector s(t.size());
  for (Index i = 0; i < t.size(); ++i) s[i] = sigmoid(t[i]);
  return data.apply_sample_matrix(s) / static_cast<double>(data.num_samples());
}

SelfAdjointOperator logistic_majorizer(const LogisticData& data) {
  const double scale = 1.0 / (4.0 * static_cast<double>(data.num_samples()));
  return SelfAdjointOperator::Gram(data.sample_matrix(), scale);
}

SelfAdjointOperator lowrank_majorizer(const LogisticData& data, Index k, MajorizerScaling scaling) {
  const Index maxk = std::min(data.ydim(), data.num_samples());
  if (k < 1 || k > maxk) throw InputError("lowrank_majorizer: K out of range");
  const Matrix a = Matrix(data.sample_matrix());
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  // factor P * diag(singular values), truncated to rank K
  Matrix u = svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal();
  const double scale = scaling == MajorizerScaling::Consistent
                           ? 1.0 / (4.0 * static_cast<double>(data.num_samples()))
                           : 1.0;
  return SelfAdjointOperator::Gram(std::move(u), scale);
}

SmoothLoss logistic_loss(const LogisticData& data) {
  SmoothLoss loss;
  loss.dim = data.ydim();
  auto shared = std::make_shared<LogisticData>(data);
  loss.value = [shared](const Vector& v) { return logistic_value(*shared, v); };
  loss.gradient = [shared](const Vector& v) { return logistic_gradient(*shared, v); };
  loss.majorizer = logistic_majorizer(data);
  // the logistic Hessian has no uniform positive lower bound
  loss.lower_curvature = SelfAdjointOperator::Zero(loss.dim);
  return loss;
}

}  // namespace madmm
