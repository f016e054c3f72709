#include "madmm/sgs.hpp"

#include <chrono>

namespace madmm {

Index BlockPartition::ydim() const {
  Index d = 0;
  for (const auto& b : y_blocks) d += b.A.rows();
  return d;
}

Index BlockPartition::zdim() const {
  Index d = 0;
  for (const auto& b : z_blocks) d += b.B.rows();
  return d;
}

void BlockPartition::validate(double sigma) const {
  if (y_blocks.empty()) throw ConfigError("BlockPartition: no y blocks");
  for (const auto& b : y_blocks) {
    require_dim(b.loss.dim, b.A.rows(), "BlockPartition: y block loss");
    require_dim(b.S.dim(), b.A.rows(), "BlockPartition: y block S");
    require_dim(b.A.cols(), xdim(), "BlockPartition: y block map");
  }
  for (const auto& b : z_blocks) {
    require_dim(b.loss.dim, b.B.rows(), "BlockPartition: z block loss");
    require_dim(b.T.dim(), b.B.rows(), "BlockPartition: z block T");
    require_dim(b.B.cols(), xdim(), "BlockPartition: z block map");
  }
  const Index cap = 5000;
  if (ydim() + zdim() > cap) return;
  auto check = [&](const SelfAdjointOperator& sig, const SelfAdjointOperator& prox,
                   const LinearMap& map, const char* what) {
    const auto block = SelfAdjointOperator::Sum(
        {{0.5, sig}, {1.0, prox}, {sigma, SelfAdjointOperator::MapGram(map)}});
    if (!is_positive_definite(block)) {
      throw ConfigError(std::string("BlockPartition: diagonal block not positive definite (") +
                        what + ")");
    }
  };
  for (std::size_t i = 0; i < y_blocks.size(); ++i) {
    check(y_blocks[i].loss.majorizer, y_blocks[i].S, y_blocks[i].A, "y");
  }
  for (std::size_t j = 0; j < z_blocks.size(); ++j) {
    check(z_blocks[j].loss.majorizer, z_blocks[j].T, z_blocks[j].B, "z");
  }
}

namespace {

Matrix cross_block(const LinearMap& ai, const LinearMap& aj, double sigma) {
  // sigma * A_i A_j^* as a dense block (columns via basis vectors of Y_j)
  Matrix out(ai.rows(), aj.rows());
  Vector e = Vector::Zero(aj.rows());
  for (Index c = 0; c < aj.rows(); ++c) {
    e[c] = 1.0;
    out.col(c) = sigma * ai.apply(aj.apply_adjoint(e));
    e[c] = 0.0;
  }
  return out;
}

template <typename Block>
SelfAdjointOperator side_terms(const std::vector<Block>& blocks, double sigma, SgsDiagonal diag,
                               const SelfAdjointOperator& (*sig_of)(const Block&),
                               const SelfAdjointOperator& (*prox_of)(const Block&),
                               const LinearMap& (*map_of)(const Block&)) {
  std::vector<SelfAdjointOperator> prox_terms;
  std::vector<Index> dims;
  for (const auto& b : blocks) {
    prox_terms.push_back(prox_of(b));
    dims.push_back(map_of(b).rows());
  }
  if (blocks.size() == 1) return prox_terms.front();

  const double factor = diag == SgsDiagonal::FullCurvature ? 1.0 : 0.5;
  BlockSymOperator mat(dims);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Matrix dii = factor * sig_of(blocks[i]).materialize() + prox_of(blocks[i]).materialize() +
                 cross_block(map_of(blocks[i]), map_of(blocks[i]), sigma);
    mat.set_block(static_cast<Index>(i), static_cast<Index>(i), std::move(dii));
    for (std::size_t j = i + 1; j < blocks.size(); ++j) {
      mat.set_block(static_cast<Index>(i), static_cast<Index>(j),
                    cross_block(map_of(blocks[i]), map_of(blocks[j]), sigma));
    }
  }
  return SelfAdjointOperator::Sum({{1.0, SelfAdjointOperator::BlockDiag(std::move(prox_terms))},
                                   {1.0, SelfAdjointOperator::SgsAugmentation(mat)}});
}

const SelfAdjointOperator& ysig(const YBlock& b) { return b.loss.majorizer; }
const SelfAdjointOperator& yprox(const YBlock& b) { return b.S; }
const LinearMap& ymap(const YBlock& b) { return b.A; }
const SelfAdjointOperator& zsig(const ZBlock& b) { return b.loss.majorizer; }
const SelfAdjointOperator& zprox(const ZBlock& b) { return b.T; }
const LinearMap& zmap(const ZBlock& b) { return b.B; }

}  // namespace

std::pair<SelfAdjointOperator, SelfAdjointOperator> build_equivalent_two_block(
    const BlockPartition& part, double sigma, SgsDiagonal diag) {
  part.validate(sigma);
  SelfAdjointOperator s = side_terms<YBlock>(part.y_blocks, sigma, diag, &ysig, &yprox, &ymap);
  SelfAdjointOperator t =
      part.z_blocks.empty()
          ? SelfAdjointOperator::Zero(0)
          : side_terms<ZBlock>(part.z_blocks, sigma, diag, &zsig, &zprox, &zmap);
  return {std::move(s), std::move(t)};
}

CompositeProblem to_two_block(const BlockPartition& part) {
  CompositeProblem p;
  // stacked losses
  std::vector<SelfAdjointOperator> sig_y, sig_z;
  std::vector<LinearMap> maps_y, maps_z;
  std::vector<Index> ydims, zdims;
  for (const auto& b : part.y_blocks) {
    sig_y.push_back(b.loss.majorizer);
    maps_y.push_back(b.A);
    ydims.push_back(b.A.rows());
  }
  for (const auto& b : part.z_blocks) {
    sig_z.push_back(b.loss.majorizer);
    maps_z.push_back(b.B);
    zdims.push_back(b.B.rows());
  }
  auto blocks_y = std::make_shared<std::vector<YBlock>>(part.y_blocks);
  auto blocks_z = std::make_shared<std::vector<ZBlock>>(part.z_blocks);
  SmoothLoss f;
  f.dim = part.ydim();
  f.value = [blocks_y](const Vector& y) {
    double v = 0.0;
    Index off = 0;
    for (const auto& b : *blocks_y) {
      v += b.loss.value(y.segment(off, b.loss.dim));
      off += b.loss.dim;
    }
    return v;
  };
  f.gradient = [blocks_y](const Vector& y) {
    Vector g(y.size());
    Index off = 0;
    for (const auto& b : *blocks_y) {
      g.segment(off, b.loss.dim) = b.loss.gradient(y.segment(off, b.loss.dim));
      off += b.loss.dim;
    }
    return g;
  };
  f.majorizer = SelfAdjointOperator::BlockDiag(sig_y);
  f.lower_curvature = SelfAdjointOperator::Zero(f.dim);
  p.loss_f = std::move(f);

  if (part.z_blocks.empty()) {
    p.loss_g = SmoothLoss::Zero(0);
    p.map_B = LinearMap::Zero(0, part.xdim());
    p.prox_q = ProxOperator::Zero();
  } else {
    SmoothLoss g;
    g.dim = part.zdim();
    g.value = [blocks_z](const Vector& z) {
      double v = 0.0;
      Index off = 0;
      for (const auto& b : *blocks_z) {
        v += b.loss.value(z.segment(off, b.loss.dim));
        off += b.loss.dim;
      }
      return v;
    };
    g.gradient = [blocks_z](const Vector& z) {
      Vector gr(z.size());
      Index off = 0;
      for (const auto& b : *blocks_z) {
        gr.segment(off, b.loss.dim) = b.loss.gradient(z.segment(off, b.loss.dim));
        off += b.loss.dim;
      }
      return gr;
    };
    g.majorizer = SelfAdjointOperator::BlockDiag(sig_z);
    g.lower_curvature = SelfAdjointOperator::Zero(g.dim);
    p.loss_g = std::move(g);
    p.map_B = maps_z.size() == 1 ? maps_z.front() : LinearMap::VStack(maps_z);
    if (zdims.size() == 1 || part.prox_q.is_zero()) {
      p.prox_q = part.prox_q;
    } else {
      std::vector<std::pair<ProxOperator, Index>> parts;
      parts.emplace_back(part.prox_q, zdims.front());
      Index rest = 0;
      for (std::size_t j = 1; j < zdims.size(); ++j) rest += zdims[j];
      parts.emplace_back(ProxOperator::Zero(), rest);
      p.prox_q = ProxOperator::Stacked(std::move(parts));
    }
  }

  p.map_A = maps_y.size() == 1 ? maps_y.front() : LinearMap::VStack(maps_y);
  if (ydims.size() == 1 || part.prox_p.is_zero()) {
    p.prox_p = part.prox_p;
  } else {
    std::vector<std::pair<ProxOperator, Index>> parts;
    parts.emplace_back(part.prox_p, ydims.front());
    Index rest = 0;
    for (std::size_t i = 1; i < ydims.size(); ++i) rest += ydims[i];
    parts.emplace_back(ProxOperator::Zero(), rest);
    p.prox_p = ProxOperator::Stacked(std::move(parts));
  }
  p.rhs_c = part.rhs_c;
  return p;
}

// ---------------------------------------------------------------------------
// SgsEngine

SgsEngine::SgsEngine(const BlockPartition& part, double sigma, LinearSolverKind solver_kind)
    : part_(std::make_shared<BlockPartition>(part)), sigma_(sigma) {
  part_->validate(sigma);
  Index off = 0;
  for (std::size_t i = 0; i < part_->y_blocks.size(); ++i) {
    const auto& b = part_->y_blocks[i];
    y_offsets_.push_back(off);
    off += b.A.rows();
    y_solvers_.emplace_back(
        i == 0 ? part_->prox_p : ProxOperator::Zero(),
        SelfAdjointOperator::Sum({{1.0, b.loss.majorizer}, {1.0, b.S}}), b.A, sigma, solver_kind,
        "sgs y-block");
  }
  off = 0;
  for (std::size_t j = 0; j < part_->z_blocks.size(); ++j) {
    const auto& b = part_->z_blocks[j];
    z_offsets_.push_back(off);
    off += b.B.rows();
    z_solvers_.emplace_back(
        j == 0 ? part_->prox_q : ProxOperator::Zero(),
        SelfAdjointOperator::Sum({{1.0, b.loss.majorizer}, {1.0, b.T}}), b.B, sigma, solver_kind,
        "sgs z-block");
  }
}

Vector SgsEngine::run_sweep(const std::vector<SubproblemSolver>& solvers, bool y_side,
                            const Vector& frozen, const Vector& other_constraint,
                            const Vector& x) const {
  const std::size_t nb = y_side ? part_->y_blocks.size() : part_->z_blocks.size();
  const auto& offsets = y_side ? y_offsets_ : z_offsets_;
  auto map_of = [&](std::size_t i) -> const LinearMap& {
    return y_side ? part_->y_blocks[i].A : part_->z_blocks[i].B;
  };
  auto loss_of = [&](std::size_t i) -> const SmoothLoss& {
    return y_side ? part_->y_blocks[i].loss : part_->z_blocks[i].loss;
  };
  auto prox_term_of = [&](std::size_t i) -> const SelfAdjointOperator& {
    return y_side ? part_->y_blocks[i].S : part_->z_blocks[i].T;
  };
  auto seg = [&](const Vector& v, std::size_t i) {
    return v.segment(offsets[i], map_of(i).rows());
  };

  // gradients are frozen at the majorization point for the entire sweep
  std::vector<Vector> grads(nb), base(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const Vector yi = seg(frozen, i);
    grads[i] = loss_of(i).gradient(yi);
    base[i] = loss_of(i).majorizer.apply(yi) + prox_term_of(i).apply(yi);
  }

  Vector cur = frozen;
  // running value of (this side's constraint contribution) + other side - c
  Vector w = other_constraint;
  for (std::size_t i = 0; i < nb; ++i) w += map_of(i).apply_adjoint(seg(cur, i));

  auto solve_block = [&](std::size_t i) {
    const Vector rest = w - map_of(i).apply_adjoint(seg(cur, i));
    const Vector rhs = base[i] - grads[i] - map_of(i).apply(x) - sigma_ * map_of(i).apply(rest);
    const Vector fresh = solvers[i].step(rhs);
    w = rest + map_of(i).apply_adjoint(fresh);
    cur.segment(offsets[i], map_of(i).rows()) = fresh;
  };

  for (std::size_t i = nb; i-- > 1;) solve_block(i);  // backward sweep s..2
  solve_block(0);                                     // the proximal block
  for (std::size_t i = 1; i < nb; ++i) solve_block(i);  // forward sweep 2..s
  return cur;
}

Vector SgsEngine::sweep_y(const IterateState& state) const {
  Vector other = -part_->rhs_c;
  for (std::size_t j = 0; j < part_->z_blocks.size(); ++j) {
    other += part_->z_blocks[j].B.apply_adjoint(
        state.z.segment(z_offsets_[j], part_->z_blocks[j].B.rows()));
  }
  return run_sweep(y_solvers_, true, state.y, other, state.x);
}

Vector SgsEngine::sweep_z(const IterateState& state, const Vector& y_new) const {
  if (part_->z_blocks.empty()) return Vector();
  Vector other = -part_->rhs_c;
  for (std::size_t i = 0; i < part_->y_blocks.size(); ++i) {
    other += part_->y_blocks[i].A.apply_adjoint(
        y_new.segment(y_offsets_[i], part_->y_blocks[i].A.rows()));
  }
  return run_sweep(z_solvers_, false, state.z, other, state.x);
}

Vector sgs_sweep_y(const BlockPartition& part, double sigma, const IterateState& state) {
  return SgsEngine(part, sigma).sweep_y(state);
}

Vector sgs_sweep_z(const BlockPartition& part, double sigma, const IterateState& state,
                   const Vector& y_new) {
  return SgsEngine(part, sigma).sweep_z(state, y_new);
}

SolveResult solve_sgs(const BlockPartition& part, const SolverConfig& cfg, IterateState start,
                      const SolveOptions& options) {
  cfg.validate();
  const CompositeProblem stacked = to_two_block(part);
  SgsEngine engine(part, cfg.sigma, cfg.y_solver);

  const ResidualFn residual =
      options.residual ? options.residual : ResidualFn(&generic_residual);

  SolveResult out;
  IterateState& s = out.state;
  s = std::move(start);
  s.r = stacked.map_A.apply_adjoint(s.y) + stacked.map_B.apply_adjoint(s.z) - stacked.rhs_c;
  if (s.z_prev.size() != s.z.size()) s.z_prev = s.z;

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  if (options.observer) options.observer(s);
  ResidualBreakdown eta = residual(stacked, s.y, s.z, s.x);
  if (eta.eta < cfg.tol) {
    out.status = SolveStatus::Converged;
    out.iterations = 0;
    if (options.record_trace) {
      TraceRow row;
      row.iter = 0;
      row.eta = eta.eta;
      row.eta_P = eta.eta_P;
      row.eta_D = eta.eta_D;
      row.eta_C = eta.eta_C;
      row.objective = stacked.objective(s.y, s.z);
      row.seconds = elapsed();
      out.trace.push_back(row);
    }
    return out;
  }

  for (int k = 0; k < cfg.max_iter; ++k) {
    const Vector y_new = engine.sweep_y(s);
    const Vector z_new = engine.sweep_z(s, y_new);
    const Vector r_new = stacked.map_A.apply_adjoint(y_new) +
                         stacked.map_B.apply_adjoint(z_new) - stacked.rhs_c;
    s.z_prev = s.z;
    s.y = y_new;
    s.z = z_new;
    s.x += cfg.tau * cfg.sigma * r_new;
    s.r = r_new;
    s.iter = k + 1;
    if (options.observer) options.observer(s);

    eta = residual(stacked, s.y, s.z, s.x);
    if (options.record_trace) {
      TraceRow row;
      row.iter = s.iter;
      row.eta = eta.eta;
      row.eta_P = eta.eta_P;
      row.eta_D = eta.eta_D;
      row.eta_C = eta.eta_C;
      row.objective = stacked.objective(s.y, s.z);
      row.seconds = elapsed();
      out.trace.push_back(row);
    }
    if (eta.eta < cfg.tol) {
      out.status = SolveStatus::Converged;
      out.iterations = s.iter;
      return out;
    }
  }
  out.status = SolveStatus::MaxIterReached;
  out.iterations = s.iter;
  return out;
}

}  // namespace madmm
