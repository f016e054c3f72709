#include "madmm/operators.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>

namespace madmm {

// ---------------------------------------------------------------------------
// BlockSymOperator

BlockSymOperator::BlockSymOperator(std::vector<Index> block_dims) : dims_(std::move(block_dims)) {
  offsets_.reserve(dims_.size());
  for (Index d : dims_) {
    if (d <= 0) throw DimensionError("BlockSymOperator: nonpositive block dim");
    offsets_.push_back(total_);
    total_ += d;
  }
  upper_.resize(dims_.size() * dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    for (std::size_t j = i; j < dims_.size(); ++j) {
      upper_[i * dims_.size() + j] = Matrix::Zero(dims_[i], dims_[j]);
    }
  }
}

void BlockSymOperator::set_block(Index i, Index j, Matrix value) {
  if (i > j) throw DimensionError("BlockSymOperator::set_block: need i <= j");
  require_dim(value.rows(), block_dim(i), "set_block rows");
  require_dim(value.cols(), block_dim(j), "set_block cols");
  upper_[static_cast<std::size_t>(i) * dims_.size() + static_cast<std::size_t>(j)] =
      std::move(value);
}

const Matrix& BlockSymOperator::block(Index i, Index j) const {
  if (i > j) throw DimensionError("BlockSymOperator::block: need i <= j");
  return upper_[static_cast<std::size_t>(i) * dims_.size() + static_cast<std::size_t>(j)];
}

Matrix BlockSymOperator::materialize() const {
  Matrix out = Matrix::Zero(total_, total_);
  for (Index i = 0; i < blocks(); ++i) {
    for (Index j = i; j < blocks(); ++j) {
      out.block(offset(i), offset(j), block_dim(i), block_dim(j)) = block(i, j);
      if (j > i) {
        out.block(offset(j), offset(i), block_dim(j), block_dim(i)) = block(i, j).transpose();
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SelfAdjointOperator factories

SelfAdjointOperator SelfAdjointOperator::Zero(Index dim) {
  SelfAdjointOperator op;
  op.kind_ = Kind::Zero;
  op.dim_ = dim;
  return op;
}

SelfAdjointOperator SelfAdjointOperator::Identity(Index dim, double scale) {
  SelfAdjointOperator op;
  op.kind_ = Kind::ScaledIdentity;
  op.dim_ = dim;
  op.scale_ = scale;
  return op;
}

SelfAdjointOperator SelfAdjointOperator::FromDiagonal(Vector d) {
  SelfAdjointOperator op;
  op.kind_ = Kind::Diagonal;
  op.dim_ = d.size();
  op.diag_ = std::move(d);
  return op;
}

SelfAdjointOperator SelfAdjointOperator::FromDense(Matrix g) {
  if (g.rows() != g.cols()) throw DimensionError("FromDense: square matrix required");
  SelfAdjointOperator op;
  op.kind_ = Kind::DenseSym;
  op.dim_ = g.rows();
  op.dense_ = 0.5 * (g + g.transpose());
  return op;
}

SelfAdjointOperator SelfAdjointOperator::Gram(Matrix u, double scale) {
  SelfAdjointOperator op;
  op.kind_ = Kind::GramDense;
  op.dim_ = u.rows();
  op.dense_ = std::move(u);
  op.scale_ = scale;
  return op;
}

SelfAdjointOperator SelfAdjointOperator::Gram(SparseMatrix u, double scale) {
  SelfAdjointOperator op;
  op.kind_ = Kind::GramSparse;
  op.dim_ = u.rows();
  op.sparse_u_ = std::move(u);
  op.scale_ = scale;
  return op;
}

SelfAdjointOperator SelfAdjointOperator::MapGram(LinearMap a) {
  SelfAdjointOperator op;
  op.kind_ = Kind::MapGram;
  op.dim_ = a.rows();
  op.map_ = std::make_shared<LinearMap>(std::move(a));
  return op;
}

SelfAdjointOperator SelfAdjointOperator::BlockDiag(std::vector<SelfAdjointOperator> blocks) {
  SelfAdjointOperator op;
  op.kind_ = Kind::BlockDiag;
  op.dim_ = 0;
  for (const auto& b : blocks) {
    op.block_dims_.push_back(b.dim());
    op.dim_ += b.dim();
  }
  op.children_ = std::move(blocks);
  return op;
}

SelfAdjointOperator SelfAdjointOperator::Sum(
    std::vector<std::pair<double, SelfAdjointOperator>> terms) {
  if (terms.empty()) throw DimensionError("Sum: no terms");
  SelfAdjointOperator op;
  op.kind_ = Kind::Sum;
  op.dim_ = terms.front().second.dim();
  for (auto& [w, t] : terms) {
    require_dim(t.dim(), op.dim_, "Sum term");
    op.weights_.push_back(w);
    op.children_.push_back(std::move(t));
  }
  return op;
}

SelfAdjointOperator SelfAdjointOperator::SgsAugmentation(const BlockSymOperator& m) {
  auto data = std::make_shared<SgsData>();
  const Index nb = m.blocks();
  for (Index i = 0; i < nb; ++i) {
    data->dims.push_back(m.block_dim(i));
    data->offsets.push_back(m.offset(i));
  }
  data->upper.resize(static_cast<std::size_t>(nb * nb));
  for (Index i = 0; i < nb; ++i) {
    for (Index j = i + 1; j < nb; ++j) {
      data->upper[static_cast<std::size_t>(i * nb + j)] = m.block(i, j);
    }
  }
  data->diag_solve.reserve(static_cast<std::size_t>(nb));
  for (Index i = 0; i < nb; ++i) {
    const Matrix& d = m.block(i, i);
    Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() <= 1e-10 * std::max(1.0, lmax)) {
      throw ConfigError("sgs_augmentation: diagonal block " + std::to_string(i) +
                        " is not positive definite");
    }
    data->diag_solve.emplace_back(d);
  }
  SelfAdjointOperator op;
  op.kind_ = Kind::SgsTerm;
  op.dim_ = m.dim();
  op.sgs_ = std::move(data);
  return op;
}

// ---------------------------------------------------------------------------
// apply / quadratic form

Vector SelfAdjointOperator::apply(const Vector& v) const {
  require_dim(v.size(), dim_, "SelfAdjointOperator::apply");
  switch (kind_) {
    case Kind::Zero:
      return Vector::Zero(dim_);
    case Kind::ScaledIdentity:
      return scale_ * v;
    case Kind::Diagonal:
      return diag_.cwiseProduct(v);
    case Kind::DenseSym:
      return dense_.selfadjointView<Eigen::Lower>() * v;
    case Kind::GramDense:
      return scale_ * (dense_ * (dense_.transpose() * v));
    case Kind::GramSparse:
      return scale_ * (sparse_u_ * (sparse_u_.transpose() * v));
    case Kind::MapGram:
      return map_->apply(map_->apply_adjoint(v));
    case Kind::BlockDiag: {
      Vector out(dim_);
      Index off = 0;
      for (const auto& b : children_) {
        out.segment(off, b.dim()) = b.apply(v.segment(off, b.dim()));
        off += b.dim();
      }
      return out;
    }
    case Kind::Sum: {
      Vector out = Vector::Zero(dim_);
      for (std::size_t k = 0; k < children_.size(); ++k) {
        out += weights_[k] * children_[k].apply(v);
      }
      return out;
    }
    case Kind::SgsTerm: {
      const auto& d = *sgs_;
      const Index nb = static_cast<Index>(d.dims.size());
      // w = M_u^* v (strictly lower action), block i gets sum_{j<i} M_ji^T v_j
      Vector w = Vector::Zero(dim_);
      for (Index i = 1; i < nb; ++i) {
        auto wi = w.segment(d.offsets[static_cast<std::size_t>(i)],
                            d.dims[static_cast<std::size_t>(i)]);
        for (Index j = 0; j < i; ++j) {
          const Matrix& mji = d.upper[static_cast<std::size_t>(j * nb + i)];  // block (j, i)
          wi += mji.transpose() * v.segment(d.offsets[static_cast<std::size_t>(j)],
                                            d.dims[static_cast<std::size_t>(j)]);
        }
      }
      // w = M_d^{-1} w
      for (Index i = 0; i < nb; ++i) {
        auto wi = w.segment(d.offsets[static_cast<std::size_t>(i)],
                            d.dims[static_cast<std::size_t>(i)]);
        wi = d.diag_solve[static_cast<std::size_t>(i)].solve(wi.eval());
      }
      // out = M_u w
      Vector out = Vector::Zero(dim_);
      for (Index i = 0; i < nb; ++i) {
        auto oi = out.segment(d.offsets[static_cast<std::size_t>(i)],
                              d.dims[static_cast<std::size_t>(i)]);
        for (Index j = i + 1; j < nb; ++j) {
          const Matrix& mij = d.upper[static_cast<std::size_t>(i * nb + j)];
          oi += mij * w.segment(d.offsets[static_cast<std::size_t>(j)],
                                d.dims[static_cast<std::size_t>(j)]);
        }
      }
      return out;
    }
  }
  throw ConfigError("SelfAdjointOperator::apply: bad kind");
}

double SelfAdjointOperator::quadratic_form(const Vector& v) const { return v.dot(apply(v)); }

Matrix SelfAdjointOperator::materialize(Index cap) const {
  if (dim_ > cap) throw ConfigError("SelfAdjointOperator::materialize: dimension cap exceeded");
  Matrix out(dim_, dim_);
  Vector e = Vector::Zero(dim_);
  for (Index j = 0; j < dim_; ++j) {
    e[j] = 1.0;
    out.col(j) = apply(e);
    e[j] = 0.0;
  }
  return 0.5 * (out + out.transpose());
}

std::optional<double> SelfAdjointOperator::as_scaled_identity() const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::ScaledIdentity:
      return scale_;
    case Kind::Diagonal: {
      const double head = diag_[0];
      if ((diag_.array() == head).all()) return head;
      return std::nullopt;
    }
    case Kind::MapGram:
      if (map_->has_orthonormal_rows() && map_->rows() == dim_) return 1.0;
      if (auto s = map_->as_scaled_identity()) return (*s) * (*s);
      return std::nullopt;
    case Kind::BlockDiag: {
      std::optional<double> common;
      for (const auto& b : children_) {
        auto s = b.as_scaled_identity();
        if (!s) return std::nullopt;
        if (common && *common != *s) return std::nullopt;
        common = s;
      }
      return common;
    }
    case Kind::Sum: {
      double total = 0.0;
      for (std::size_t k = 0; k < children_.size(); ++k) {
        auto s = children_[k].as_scaled_identity();
        if (!s) return std::nullopt;
        total += weights_[k] * (*s);
      }
      return total;
    }
    default:
      return std::nullopt;
  }
}

bool SelfAdjointOperator::collect_diag_grams(double weight, DiagPlusGrams& out) const {
  switch (kind_) {
    case Kind::Zero:
      return true;
    case Kind::ScaledIdentity:
      out.diag.array() += weight * scale_;
      return true;
    case Kind::Diagonal:
      out.diag += weight * diag_;
      return true;
    case Kind::GramDense:
      out.grams.emplace_back(weight * scale_, dense_);
      return true;
    case Kind::GramSparse:
      out.grams.emplace_back(weight * scale_, Matrix(sparse_u_));
      return true;
    case Kind::Sum: {
      for (std::size_t k = 0; k < children_.size(); ++k) {
        if (!children_[k].collect_diag_grams(weight * weights_[k], out)) return false;
      }
      return true;
    }
    case Kind::MapGram:
      if (auto d = map_->gram_diagonal()) {
        out.diag += weight * (*d);
        return true;
      }
      return false;
    default:
      return false;
  }
}

std::optional<SelfAdjointOperator::DiagPlusGrams> SelfAdjointOperator::as_diag_plus_grams() const {
  DiagPlusGrams out;
  out.diag = Vector::Zero(dim_);
  if (!collect_diag_grams(1.0, out)) return std::nullopt;
  // merge repeated factors (e.g. Sigma_hat and -1/2 Sigma_hat from an
  // indefinite proximal term) so the net scale is visible
  std::vector<std::pair<double, Matrix>> merged;
  for (auto& [s, u] : out.grams) {
    bool found = false;
    for (auto& [ms, mu] : merged) {
      if (mu.rows() == u.rows() && mu.cols() == u.cols() && mu == u) {
        ms += s;
        found = true;
        break;
      }
    }
    if (!found) merged.emplace_back(s, std::move(u));
  }
  out.grams.clear();
  for (auto& [s, u] : merged) {
    if (s != 0.0) out.grams.emplace_back(s, std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// spectral helpers

EigenEstimate max_eigenvalue(const SelfAdjointOperator& op, double tol, int max_iter) {
  // Lanczos with full reorthogonalization; the Krylov space is exact at
  // dimension n, so desk-scale operators always resolve. The residual bound
  // |beta_j s_j| certifies |theta - lambda_max| for symmetric operators.
  EigenEstimate est;
  const Index n = op.dim();
  if (n == 0) {
    est.converged = true;
    return est;
  }
  const Index m = std::min<Index>(n, std::min<Index>(max_iter, 400));
  Matrix basis(n, m);
  Vector alpha(m), beta(m);
  Vector v = Vector::Ones(n);
  for (Index i = 0; i < n; ++i) v[i] += 1e-3 * static_cast<double>((i % 17) + 1);
  v.normalize();
  basis.col(0) = v;

  double theta = 0.0;
  Index j = 0;
  for (; j < m; ++j) {
    Vector w = op.apply(basis.col(j));
    alpha[j] = basis.col(j).dot(w);
    w -= alpha[j] * basis.col(j);
    if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
    // two passes of reorthogonalization keep the basis numerically orthogonal
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    }
    beta[j] = w.norm();

    Matrix tri = Matrix::Zero(j + 1, j + 1);
    for (Index i = 0; i <= j; ++i) {
      tri(i, i) = alpha[i];
      if (i > 0) tri(i, i - 1) = tri(i - 1, i) = beta[i - 1];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(tri);
    theta = es.eigenvalues().maxCoeff();
    Index top = 0;
    es.eigenvalues().maxCoeff(&top);
    const double resid = beta[j] * std::abs(es.eigenvectors()(j, top));
    est.iterations = static_cast<int>(j + 1);
    est.value = theta;
    if (resid <= tol * std::max(1.0, std::abs(theta)) || beta[j] <= 1e-14 || j + 1 == n) {
      est.converged = true;
      return est;
    }
    if (j + 1 < m) basis.col(j + 1) = w / beta[j];
  }
  est.converged = false;
  return est;
}

double min_eigenvalue_dense(const SelfAdjointOperator& op, Index cap) {
  const Matrix g = op.materialize(cap);
  if (g.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_positive_definite(const SelfAdjointOperator& op, double tol, Index cap) {
  const Matrix g = op.materialize(cap);
  if (g.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (tol < 0.0) {
    const double lmax = es.eigenvalues().maxCoeff();
    tol = 1e-10 * std::max(1.0, lmax);
  }
  return lmin > tol;
}

bool dominates_negative_half(const SelfAdjointOperator& s, const SelfAdjointOperator& sigma_hat,
                             double margin, Index cap) {
  require_dim(sigma_hat.dim(), s.dim(), "dominates_negative_half");
  const Matrix m = s.materialize(cap) + 0.5 * sigma_hat.materialize(cap);
  if (m.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -margin * scale;
}

// ---------------------------------------------------------------------------
// SMW

SMWFactorization::SMWFactorization(Vector diag, Matrix u) : diag_(std::move(diag)), u_(std::move(u)) {
  if (u_.size() > 0) require_dim(u_.rows(), diag_.size(), "SMWFactorization");
  if ((diag_.array() <= 0.0).any()) {
    throw ConfigError("SMWFactorization: diagonal part must be strictly positive");
  }
  inv_diag_ = diag_.cwiseInverse();
  const Index k = u_.cols();
  if (k > 0) {
    Matrix cap = Matrix::Identity(k, k);
    cap.noalias() += u_.transpose() * inv_diag_.asDiagonal() * u_;
    capacitance_.compute(cap);
    if (capacitance_.info() != Eigen::Success || !capacitance_.isPositive()) {
      throw ConfigError("SMWFactorization: singular capacitance matrix");
    }
  }
}

Vector SMWFactorization::solve(const Vector& b) const {
  require_dim(b.size(), diag_.size(), "SMWFactorization::solve");
  Vector x = inv_diag_.cwiseProduct(b);
  if (u_.cols() > 0) {
    const Vector t = capacitance_.solve(u_.transpose() * x);
    x -= inv_diag_.cwiseProduct(u_ * t);
  }
  return x;
}

}  // namespace madmm
