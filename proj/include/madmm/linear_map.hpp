#pragma once

#include <optional>
#include <vector>

#include "madmm/types.hpp"

namespace madmm {

// Structured linear map between Euclidean spaces. apply() is the forward
// action (cols -> rows), apply_adjoint() the exact transpose action.
// Structure tags keep large maps symbolic; materialize() is for small dims.
class LinearMap {
 public:
  enum class Kind { Zero, ScaledIdentity, Dense, Sparse, VStack, RowSelect, Adjoint };

  LinearMap() = default;  // the empty map

  static LinearMap Zero(Index rows, Index cols);
  static LinearMap Identity(Index dim, double scale = 1.0);
  static LinearMap FromDense(Matrix m);
  static LinearMap FromSparse(SparseMatrix m);
  // stacks codomains: apply(v) = [parts[0].apply(v); parts[1].apply(v); ...]
  static LinearMap VStack(std::vector<LinearMap> parts);
  // (apply(v))_k = v[rows[k]]; adjoint scatters back
  static LinearMap RowSelect(std::vector<Index> rows, Index cols);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Kind kind() const { return kind_; }

  Vector apply(const Vector& v) const;
  Vector apply_adjoint(const Vector& u) const;

  LinearMap adjoint() const;

  Matrix materialize(Index cap = 5000) const;

  // alpha * I?
  std::optional<double> as_scaled_identity() const;
  // map with orthonormal rows (M M^T = I), e.g. a coordinate permutation
  bool has_orthonormal_rows() const;
  // diagonal of M M^T when the structure guarantees M M^T is diagonal
  std::optional<Vector> gram_diagonal() const;

 private:
  Kind kind_ = Kind::Zero;
  Index rows_ = 0;
  Index cols_ = 0;
  double scale_ = 0.0;
  Matrix dense_;
  SparseMatrix sparse_;
  std::vector<LinearMap> parts_;
  std::vector<Index> select_;
};

}  // namespace madmm
