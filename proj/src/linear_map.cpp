#include "madmm/linear_map.hpp"

#include <algorithm>
#include <utility>

namespace madmm {

LinearMap LinearMap::Zero(Index rows, Index cols) {
  LinearMap m;
  m.kind_ = Kind::Zero;
  m.rows_ = rows;
  m.cols_ = cols;
  return m;
}

LinearMap LinearMap::Identity(Index dim, double scale) {
  LinearMap m;
  m.kind_ = Kind::ScaledIdentity;
  m.rows_ = m.cols_ = dim;
  m.scale_ = scale;
  return m;
}

LinearMap LinearMap::FromDense(Matrix mat) {
  LinearMap m;
  m.kind_ = Kind::Dense;
  m.rows_ = mat.rows();
  m.cols_ = mat.cols();
  m.dense_ = std::move(mat);
  return m;
}

LinearMap LinearMap::FromSparse(SparseMatrix mat) {
  LinearMap m;
  m.kind_ = Kind::Sparse;
  m.rows_ = mat.rows();
  m.cols_ = mat.cols();
  m.sparse_ = std::move(mat);
  return m;
}

LinearMap LinearMap::VStack(std::vector<LinearMap> parts) {
  if (parts.empty()) throw DimensionError("VStack: no parts");
  LinearMap m;
  m.kind_ = Kind::VStack;
  m.cols_ = parts.front().cols();
  m.rows_ = 0;
  for (const auto& p : parts) {
    require_dim(p.cols(), m.cols_, "VStack part");
    m.rows_ += p.rows();
  }
  m.parts_ = std::move(parts);
  return m;
}

LinearMap LinearMap::RowSelect(std::vector<Index> rows, Index cols) {
  LinearMap m;
  m.kind_ = Kind::RowSelect;
  m.rows_ = static_cast<Index>(rows.size());
  m.cols_ = cols;
  for (Index r : rows) {
    if (r < 0 || r >= cols) throw DimensionError("RowSelect: index out of range");
  }
  m.select_ = std::move(rows);
  return m;
}

LinearMap LinearMap::adjoint() const {
  if (kind_ == Kind::Adjoint) return parts_.front();
  if (kind_ == Kind::Zero) return Zero(cols_, rows_);
  if (kind_ == Kind::ScaledIdentity) return *this;
  LinearMap m;
  m.kind_ = Kind::Adjoint;
  m.rows_ = cols_;
  m.cols_ = rows_;
  m.parts_.push_back(*this);
  return m;
}

Vector LinearMap::apply(const Vector& v) const {
  require_dim(v.size(), cols_, "LinearMap::apply");
  switch (kind_) {
    case Kind::Zero:
      return Vector::Zero(rows_);
    case Kind::ScaledIdentity:
      return scale_ * v;
    case Kind::Dense:
      return dense_ * v;
    case Kind::Sparse:
      return sparse_ * v;
    case Kind::VStack: {
      Vector out(rows_);
      Index off = 0;
      for (const auto& p : parts_) {
        out.segment(off, p.rows()) = p.apply(v);
        off += p.rows();
      }
      return out;
    }
    case Kind::RowSelect: {
      Vector out(rows_);
      for (Index k = 0; k < rows_; ++k) out[k] = v[select_[static_cast<std::size_t>(k)]];
      return out;
    }
    case Kind::Adjoint:
      return parts_.front().apply_adjoint(v);
  }
  throw ConfigError("LinearMap::apply: bad kind");
}

Vector LinearMap::apply_adjoint(const Vector& u) const {
  require_dim(u.size(), rows_, "LinearMap::apply_adjoint");
  switch (kind_) {
    case Kind::Zero:
      return Vector::Zero(cols_);
    case Kind::ScaledIdentity:
      return scale_ * u;
    case Kind::Dense:
      return dense_.transpose() * u;
    case Kind::Sparse:
      return sparse_.transpose() * u;
    case Kind::VStack: {
      Vector out = Vector::Zero(cols_);
      Index off = 0;
      for (const auto& p : parts_) {
        out += p.apply_adjoint(u.segment(off, p.rows()));
        off += p.rows();
      }
      return out;
    }
    case Kind::RowSelect: {
      Vector out = Vector::Zero(cols_);
      for (Index k = 0; k < rows_; ++k) out[select_[static_cast<std::size_t>(k)]] += u[k];
      return out;
    }
    case Kind::Adjoint:
      return parts_.front().apply(u);
  }
  throw ConfigError("LinearMap::apply_adjoint: bad kind");
}

Matrix LinearMap::materialize(Index cap) const {
  if (rows_ > cap || cols_ > cap) {
    throw ConfigError("LinearMap::materialize: dimension cap exceeded");
  }
  Matrix out(rows_, cols_);
  Vector e = Vector::Zero(cols_);
  for (Index j = 0; j < cols_; ++j) {
    e[j] = 1.0;
    out.col(j) = apply(e);
    e[j] = 0.0;
  }
  return out;
}

std::optional<double> LinearMap::as_scaled_identity() const {
  switch (kind_) {
    case Kind::ScaledIdentity:
      return scale_;
    case Kind::Zero:
      return rows_ == cols_ ? std::optional<double>(0.0) : std::nullopt;
    case Kind::Adjoint:
      return parts_.front().as_scaled_identity();
    case Kind::RowSelect: {
      // the identity permutation only
      if (rows_ != cols_) return std::nullopt;
      for (Index k = 0; k < rows_; ++k) {
        if (select_[static_cast<std::size_t>(k)] != k) return std::nullopt;
      }
      return 1.0;
    }
    default:
      return std::nullopt;
  }
}

std::optional<Vector> LinearMap::gram_diagonal() const {
  switch (kind_) {
    case Kind::Zero:
      return Vector(Vector::Zero(rows_));
    case Kind::ScaledIdentity:
      return Vector(Vector::Constant(rows_, scale_ * scale_));
    case Kind::RowSelect: {
      if (!has_orthonormal_rows()) return std::nullopt;
      return Vector(Vector::Ones(rows_));
    }
    case Kind::VStack: {
      // cross blocks of the stacked Gram vanish only when at most one part
      // is nonzero
      std::size_t nonzero = 0;
      for (const auto& p : parts_) {
        if (p.kind() != Kind::Zero) ++nonzero;
      }
      if (nonzero > 1) return std::nullopt;
      Vector out(rows_);
      Index off = 0;
      for (const auto& p : parts_) {
        const auto d = p.gram_diagonal();
        if (!d) return std::nullopt;
        out.segment(off, p.rows()) = *d;
        off += p.rows();
      }
      return out;
    }
    default:
      return std::nullopt;
  }
}

bool LinearMap::has_orthonormal_rows() const {
  switch (kind_) {
    case Kind::ScaledIdentity:
      return scale_ == 1.0 || scale_ == -1.0;
    case Kind::RowSelect: {
      std::vector<Index> sorted = select_;
      std::sort(sorted.begin(), sorted.end());
      return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    }
    default:
      return false;
  }
}

}  // namespace madmm
