#include "madmm/prox.hpp"

#include <cmath>
#include <limits>

namespace madmm {

namespace {
double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
}  // namespace

Vector soft_threshold(const Vector& v, double lambda) {
  if (lambda < 0.0) throw InputError("soft_threshold: negative lambda");
  return v.array().sign() * (v.array().abs() - lambda).max(0.0);
}

// Direct 1-D total variation prox: one forward pass maintaining a tube of
// admissible segment levels [vmin, vmax], emitting a finished segment on
// every forced jump. Restarts from the jump point resolve the tail.
Vector tv1d_prox(const Vector& v, double lambda2) {
  if (lambda2 < 0.0) throw InputError("tv1d_prox: negative lambda2");
  const Index n = v.size();
  if (n == 0) throw DimensionError("tv1d_prox: empty input");
  Vector x(n);
  if (n == 1 || lambda2 == 0.0) {
    x = v;
    return x;
  }
  const double lam = lambda2;
  Index k = 0, k0 = 0, km = 0, kp = 0;
  double vmin = v[0] - lam;
  double vmax = v[0] + lam;
  double umin = lam;
  double umax = -lam;
  for (;;) {
    // a boundary jump may have isolated the final sample
    if (k == n - 1 && k0 == n - 1) {
      x[k] = vmin + umin;
      return x;
    }
    while (k < n - 1) {
      if (v[k + 1] + umin < vmin - lam) {  // negative jump is forced
        for (Index i = k0; i <= km; ++i) x[i] = vmin;
        k = k0 = km = kp = km + 1;
        vmin = v[k];
        vmax = v[k] + 2.0 * lam;
        umin = lam;
        umax = -lam;
      } else if (v[k + 1] + umax > vmax + lam) {  // positive jump is forced
        for (Index i = k0; i <= kp; ++i) x[i] = vmax;
        k = k0 = km = kp = kp + 1;
        vmin = v[k] - 2.0 * lam;
        vmax = v[k];
        umin = lam;
        umax = -lam;
      } else {  // fuse the next sample into the current segment
        ++k;
        umin += v[k] - vmin;
        umax += v[k] - vmax;
        if (umin >= lam) {
          vmin += (umin - lam) / static_cast<double>(k - k0 + 1);
          umin = lam;
          km = k;
        }
        if (umax <= -lam) {
          vmax += (umax + lam) / static_cast<double>(k - k0 + 1);
          umax = -lam;
          kp = k;
        }
      }
    }
    // end of signal reached: resolve the dangling segment
    if (umin < 0.0) {  // lower string does not reach the end, negative jump
      for (Index i = k0; i <= km; ++i) x[i] = vmin;
      k = k0 = km = km + 1;
      vmin = v[k];
      umin = lam;
      umax = v[k] + lam - vmax;
    } else if (umax > 0.0) {  // upper string does not reach the end
      for (Index i = k0; i <= kp; ++i) x[i] = vmax;
      k = k0 = kp = kp + 1;
      vmax = v[k];
      umax = -lam;
      umin = v[k] - lam - vmin;
    } else {  // both strings reach the end: final segment level
      const double level = vmin + umin / static_cast<double>(k - k0 + 1);
      for (Index i = k0; i < n; ++i) x[i] = level;
      return x;
    }
  }
}

Vector fused_lasso_prox(const Vector& v, double lambda1, double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw InputError("fused_lasso_prox: negative parameter");
  return soft_threshold(tv1d_prox(v, lambda2), lambda1);
}

Vector project_nonneg(const Vector& v) { return v.cwiseMax(0.0); }

Vector project_linf_ball(const Vector& v, double radius) {
  if (radius <= 0.0) throw InputError("project_linf_ball: nonpositive radius");
  return v.cwiseMin(radius).cwiseMax(-radius);
}

void GroupSpec::validate(Index dim) const {
  if (static_cast<Index>(groups.size()) != radii.size()) {
    throw DimensionError("GroupSpec: groups/radii size mismatch");
  }
  if ((radii.array() <= 0.0).any()) throw InputError("GroupSpec: nonpositive radius");
  std::vector<char> seen(static_cast<std::size_t>(dim), 0);
  for (const auto& g : groups) {
    for (Index i : g) {
      if (i < 0 || i >= dim) throw DimensionError("GroupSpec: index out of range");
      if (seen[static_cast<std::size_t>(i)]) {
        throw InputError("GroupSpec: overlapping groups are not supported");
      }
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
}

Vector project_group_l2_ball(const Vector& v, const GroupSpec& spec) {
  spec.validate(v.size());
  Vector out = v;
  for (std::size_t l = 0; l < spec.groups.size(); ++l) {
    double norm2 = 0.0;
    for (Index i : spec.groups[l]) norm2 += v[i] * v[i];
    const double norm = std::sqrt(norm2);
    const double radius = spec.radii[static_cast<Index>(l)];
    if (norm > radius) {
      const double f = radius / norm;
      for (Index i : spec.groups[l]) out[i] = f * v[i];
    }
  }
  return out;
}

double tv_chain_certificate(const Vector& v, const Vector& z, double lambda2) {
  require_dim(z.size(), v.size(), "tv_chain_certificate");
  const Index n = v.size();
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  const double jump_tol = 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff());
  double worst = 0.0;
  double w = 0.0;
  for (Index i = 0; i < n; ++i) {
    w += v[i] - z[i];
    if (i == n - 1) {
      worst = std::max(worst, std::abs(w));  // w_n = 0
      break;
    }
    worst = std::max(worst, std::abs(w) - lambda2);
    const double jump = z[i + 1] - z[i];
    if (std::abs(jump) > jump_tol) {
      // at a jump the dual chain sits on the boundary with the opposite sign
      worst = std::max(worst, std::abs(w + lambda2 * sgn(jump)));
    }
  }
  return std::max(worst, 0.0) / scale;
}

double fused_certificate(const Vector& v, double lambda1, double lambda2, const Vector& z0,
                         const Vector& zstar) {
  require_dim(z0.size(), v.size(), "fused_certificate");
  require_dim(zstar.size(), v.size(), "fused_certificate");
  const Index n = v.size();
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  const double zero_tol = 1e-12 * std::max(1.0, zstar.cwiseAbs().maxCoeff());
  double worst = 0.0;
  // l1 part: g = z0 - zstar must lie in lambda1 * subdiff ||.||_1 at zstar
  for (Index i = 0; i < n; ++i) {
    const double g = z0[i] - zstar[i];
    if (std::abs(zstar[i]) > zero_tol) {
      worst = std::max(worst, std::abs(g - lambda1 * sgn(zstar[i])));
    } else {
      worst = std::max(worst, std::abs(g) - lambda1);
    }
  }
  // TV part: chain of z0 against v, with jump signs taken from zstar
  double w = 0.0;
  for (Index i = 0; i < n; ++i) {
    w += v[i] - z0[i];
    if (i == n - 1) {
      worst = std::max(worst, std::abs(w));
      break;
    }
    worst = std::max(worst, std::abs(w) - lambda2);
    const double jump = zstar[i + 1] - zstar[i];
    if (std::abs(jump) > zero_tol) {
      worst = std::max(worst, std::abs(w + lambda2 * sgn(jump)));
    }
  }
  return std::max(worst, 0.0) / scale;
}

// ---------------------------------------------------------------------------
// ProxOperator

ProxOperator ProxOperator::Zero() { return ProxOperator(); }

ProxOperator ProxOperator::L1(double lambda1) {
  if (lambda1 < 0.0) throw InputError("ProxOperator::L1: negative lambda");
  ProxOperator p;
  p.kind_ = Kind::L1;
  p.lambda1_ = lambda1;
  return p;
}

ProxOperator ProxOperator::FusedLasso(double lambda1, double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw InputError("ProxOperator::FusedLasso: negative lambda");
  ProxOperator p;
  p.kind_ = Kind::Fused;
  p.lambda1_ = lambda1;
  p.lambda2_ = lambda2;
  return p;
}

ProxOperator ProxOperator::TV1D(double lambda2) {
  if (lambda2 < 0.0) throw InputError("ProxOperator::TV1D: negative lambda");
  ProxOperator p;
  p.kind_ = Kind::TV1D;
  p.lambda2_ = lambda2;
  return p;
}

ProxOperator ProxOperator::NonnegOrthant() {
  ProxOperator p;
  p.kind_ = Kind::NonnegOrthant;
  return p;
}

ProxOperator ProxOperator::LinfBall(double radius) {
  if (radius <= 0.0) throw InputError("ProxOperator::LinfBall: nonpositive radius");
  ProxOperator p;
  p.kind_ = Kind::LinfBall;
  p.lambda1_ = radius;
  return p;
}

ProxOperator ProxOperator::GroupL2Ball(GroupSpec spec) {
  ProxOperator p;
  p.kind_ = Kind::GroupL2Ball;
  p.spec_ = std::make_shared<GroupSpec>(std::move(spec));
  return p;
}

ProxOperator ProxOperator::Stacked(std::vector<std::pair<ProxOperator, Index>> parts) {
  ProxOperator p;
  p.kind_ = Kind::Stacked;
  p.parts_ = std::move(parts);
  return p;
}

Vector ProxOperator::evaluate(const Vector& v, double step) const {
  if (step <= 0.0) throw InputError("ProxOperator::evaluate: nonpositive step");
  switch (kind_) {
    case Kind::Zero:
      return v;
    case Kind::L1:
      return soft_threshold(v, lambda1_ * step);
    case Kind::Fused:
      return fused_lasso_prox(v, lambda1_ * step, lambda2_ * step);
    case Kind::TV1D:
      return tv1d_prox(v, lambda2_ * step);
    case Kind::NonnegOrthant:
      return project_nonneg(v);
    case Kind::LinfBall:
      return project_linf_ball(v, lambda1_);
    case Kind::GroupL2Ball:
      return project_group_l2_ball(v, *spec_);
    case Kind::Stacked: {
      Vector out(v.size());
      Index off = 0;
      for (const auto& [p, d] : parts_) {
        out.segment(off, d) = p.evaluate(v.segment(off, d), step);
        off += d;
      }
      require_dim(off, v.size(), "ProxOperator::Stacked");
      return out;
    }
  }
  throw ConfigError("ProxOperator::evaluate: bad kind");
}

double ProxOperator::value(const Vector& v, double feas_tol) const {
  const double inf = std::numeric_limits<double>::infinity();
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::L1:
      return lambda1_ * v.lpNorm<1>();
    case Kind::Fused: {
      double tv = 0.0;
      for (Index i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
      return lambda1_ * v.lpNorm<1>() + lambda2_ * tv;
    }
    case Kind::TV1D: {
      double tv = 0.0;
      for (Index i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
      return lambda2_ * tv;
    }
    case Kind::NonnegOrthant:
      return v.minCoeff() >= -feas_tol ? 0.0 : inf;
    case Kind::LinfBall:
      return v.cwiseAbs().maxCoeff() <= lambda1_ + feas_tol ? 0.0 : inf;
    case Kind::GroupL2Ball: {
      for (std::size_t l = 0; l < spec_->groups.size(); ++l) {
        double norm2 = 0.0;
        for (Index i : spec_->groups[l]) norm2 += v[i] * v[i];
        if (std::sqrt(norm2) > spec_->radii[static_cast<Index>(l)] + feas_tol) return inf;
      }
      return 0.0;
    }
    case Kind::Stacked: {
      double total = 0.0;
      Index off = 0;
      for (const auto& [p, d] : parts_) {
        total += p.value(v.segment(off, d), feas_tol);
        off += d;
      }
      return total;
    }
  }
  throw ConfigError("ProxOperator::value: bad kind");
}

}  // namespace madmm
