#pragma once

#include <Eigen/Cholesky>

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "madmm/linear_map.hpp"
#include "madmm/types.hpp"

namespace madmm {

class SelfAdjointOperator;

// Dense symmetric block matrix, the input to the symmetric Gauss-Seidel
// augmentation. Blocks are stored for i <= j; block (j, i) is the transpose.
class BlockSymOperator {
 public:
  explicit BlockSymOperator(std::vector<Index> block_dims);

  Index blocks() const { return static_cast<Index>(dims_.size()); }
  Index dim() const { return total_; }
  Index block_dim(Index i) const { return dims_[static_cast<std::size_t>(i)]; }
  Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }

  void set_block(Index i, Index j, Matrix value);  // i <= j
  const Matrix& block(Index i, Index j) const;     // i <= j

  Matrix materialize() const;

 private:
  std::vector<Index> dims_;
  std::vector<Index> offsets_;
  Index total_ = 0;
  std::vector<Matrix> upper_;  // row-major over i <= j
};

// Self-adjoint linear operator with a structured representation so that
// composites like -1/2 Sigma_hat + Diag(0, sigma r) or Gauss-Seidel
// augmentations can be applied without densification. Materialization is
// reserved for definiteness checks and diagnostics at moderate dimensions.
class SelfAdjointOperator {
 public:
  enum class Kind {
    Zero,
    ScaledIdentity,
    Diagonal,
    DenseSym,
    GramDense,   // scale * U U^T, U dense
    GramSparse,  // scale * U U^T, U sparse
    MapGram,     // A A^* for a LinearMap A
    BlockDiag,
    Sum,      // weighted sum of operators
    SgsTerm,  // M_u M_d^{-1} M_u^* from a block matrix
  };

  SelfAdjointOperator() = default;

  static SelfAdjointOperator Zero(Index dim);
  static SelfAdjointOperator Identity(Index dim, double scale = 1.0);
  static SelfAdjointOperator FromDiagonal(Vector d);
  static SelfAdjointOperator FromDense(Matrix g);  // symmetrized on input
  static SelfAdjointOperator Gram(Matrix u, double scale);
  static SelfAdjointOperator Gram(SparseMatrix u, double scale);
  static SelfAdjointOperator MapGram(LinearMap a);  // A A^*
  static SelfAdjointOperator BlockDiag(std::vector<SelfAdjointOperator> blocks);
  static SelfAdjointOperator Sum(std::vector<std::pair<double, SelfAdjointOperator>> terms);
  // sGS(M) := M_u M_d^{-1} M_u^*; requires every diagonal block positive definite
  static SelfAdjointOperator SgsAugmentation(const BlockSymOperator& m);

  Index dim() const { return dim_; }
  Kind kind() const { return kind_; }

  Vector apply(const Vector& v) const;
  double quadratic_form(const Vector& v) const;

  Matrix materialize(Index cap = 5000) const;

  std::optional<double> as_scaled_identity() const;

  // canonical D + sum of scale_k * U_k U_k^T decomposition when the structure
  // is a weighted sum of diagonal-like and Gram terms (SMW candidates)
  struct DiagPlusGrams {
    Vector diag;
    std::vector<std::pair<double, Matrix>> grams;
  };
  std::optional<DiagPlusGrams> as_diag_plus_grams() const;

 private:
  bool collect_diag_grams(double weight, DiagPlusGrams& out) const;

  Kind kind_ = Kind::Zero;
  Index dim_ = 0;
  double scale_ = 0.0;
  Vector diag_;
  Matrix dense_;
  SparseMatrix sparse_u_;
  std::shared_ptr<LinearMap> map_;
  std::vector<SelfAdjointOperator> children_;
  std::vector<double> weights_;
  std::vector<Index> block_dims_;
  // SgsTerm payload
  struct SgsData {
    std::vector<Index> dims;
    std::vector<Index> offsets;
    std::vector<Matrix> upper;                    // blocks (i, j), i < j, row-major
    std::vector<Eigen::LDLT<Matrix>> diag_solve;  // factorizations of diagonal blocks
  };
  std::shared_ptr<SgsData> sgs_;
};

// free-function spellings used throughout
inline Vector apply(const SelfAdjointOperator& op, const Vector& v) { return op.apply(v); }
inline double quadratic_form(const SelfAdjointOperator& op, const Vector& v) {
  return op.quadratic_form(v);
}

struct EigenEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// largest (signed) eigenvalue via shifted power iteration;
// |result - lambda_max| <= tol * max(1, |lambda_max|) on convergence
EigenEstimate max_eigenvalue(const SelfAdjointOperator& op, double tol = 1e-8,
                             int max_iter = 10000);

// smallest eigenvalue of the dense materialization (dim <= cap)
double min_eigenvalue_dense(const SelfAdjointOperator& op, Index cap = 5000);

// lambda_min > tol after densification; with tol < 0 the default margin
// 1e-10 * max(1, lambda_max) is used
bool is_positive_definite(const SelfAdjointOperator& op, double tol = -1.0, Index cap = 5000);

// S >= -1/2 SigmaHat within margin, checked densely
bool dominates_negative_half(const SelfAdjointOperator& s, const SelfAdjointOperator& sigma_hat,
                             double margin = 1e-9, Index cap = 5000);

inline SelfAdjointOperator sgs_augmentation(const BlockSymOperator& m) {
  return SelfAdjointOperator::SgsAugmentation(m);
}

// solves (D + U U^T) x = b with D diagonal positive via the
// Sherman-Morrison-Woodbury identity; the capacitance I + U^T D^{-1} U is
// factorized once at construction
class SMWFactorization {
 public:
  SMWFactorization(Vector diag, Matrix u);

  Vector solve(const Vector& b) const;
  Index dim() const { return diag_.size(); }

 private:
  Vector diag_;      // D
  Vector inv_diag_;  // D^{-1}
  Matrix u_;
  Eigen::LDLT<Matrix> capacitance_;
};

}  // namespace madmm
