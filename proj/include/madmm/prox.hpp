#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "madmm/types.hpp"

namespace madmm {

// componentwise sgn(v_i) * max(|v_i| - lambda, 0)
Vector soft_threshold(const Vector& v, double lambda);

// exact minimizer of lambda2 * sum_{i>=2} |z_i - z_{i-1}| + 1/2 ||z - v||^2
// (direct single-pass taut-string style algorithm)
Vector tv1d_prox(const Vector& v, double lambda2);

// soft_threshold(tv1d_prox(v, lambda2), lambda1)
Vector fused_lasso_prox(const Vector& v, double lambda1, double lambda2);

Vector project_nonneg(const Vector& v);
Vector project_linf_ball(const Vector& v, double radius);

struct GroupSpec {
  std::vector<std::vector<Index>> groups;  // disjoint index sets
  Vector radii;                            // one positive radius per group

  void validate(Index dim) const;  // throws on overlap / bad radii
};

Vector project_group_l2_ball(const Vector& v, const GroupSpec& spec);

// Optimality certificate for the TV prox: with w_i = sum_{l<=i} (v_l - z_l),
// w_n must vanish, |w_i| <= lambda2, and w_i = -lambda2 * sgn(z_{i+1} - z_i)
// wherever z jumps. Returns the worst constraint violation.
double tv_chain_certificate(const Vector& v, const Vector& z, double lambda2);

// Combined certificate for the fused-lasso prox: the soft-threshold
// displacement z0 - zstar must be a valid scaled l1 subgradient at zstar and
// the TV chain of z0 must carry the jump signs of zstar.
double fused_certificate(const Vector& v, double lambda1, double lambda2, const Vector& z0,
                         const Vector& zstar);

// Moreau-Yosida proximal object: evaluate(v, step) minimizes
// theta(.) + 1/(2 step) ||. - v||^2. All kinds are 1-Lipschitz.
class ProxOperator {
 public:
  enum class Kind { Zero, L1, Fused, TV1D, NonnegOrthant, LinfBall, GroupL2Ball, Stacked };

  ProxOperator() = default;  // Zero

  static ProxOperator Zero();
  static ProxOperator L1(double lambda1);
  static ProxOperator FusedLasso(double lambda1, double lambda2);
  static ProxOperator TV1D(double lambda2);
  static ProxOperator NonnegOrthant();
  static ProxOperator LinfBall(double radius);
  static ProxOperator GroupL2Ball(GroupSpec spec);
  // concatenation of independent proxes over consecutive segments
  static ProxOperator Stacked(std::vector<std::pair<ProxOperator, Index>> parts);

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::Zero; }

  Vector evaluate(const Vector& v, double step = 1.0) const;

  // theta(v); +infinity when an indicator is violated beyond tolerance
  double value(const Vector& v, double feas_tol = 1e-12) const;

  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }

 private:
  Kind kind_ = Kind::Zero;
  double lambda1_ = 0.0;
  double lambda2_ = 0.0;
  std::shared_ptr<GroupSpec> spec_;
  std::vector<std::pair<ProxOperator, Index>> parts_;
};

}  // namespace madmm
