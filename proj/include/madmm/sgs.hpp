#pragma once

#include <utility>
#include <vector>

#include "madmm/ipadmm.hpp"

namespace madmm {

// Multi-block structure: p acts on the first y-block, q on the first
// z-block; every other block carries only a smooth loss.
struct YBlock {
  SmoothLoss loss;
  SelfAdjointOperator S;
  LinearMap A;  // A_i : X -> Y_i
};

struct ZBlock {
  SmoothLoss loss;
  SelfAdjointOperator T;
  LinearMap B;  // B_j : X -> Z_j
};

struct BlockPartition {
  std::vector<YBlock> y_blocks;
  ProxOperator prox_p;  // on y-block 1
  std::vector<ZBlock> z_blocks;
  ProxOperator prox_q;  // on z-block 1
  Vector rhs_c;

  Index ydim() const;
  Index zdim() const;
  Index xdim() const { return rhs_c.size(); }

  // shape consistency plus the per-block positive definiteness condition
  // 1/2 Sigma_hat_i + S_i + sigma A_i A_i^* > 0 (dense check at desk scale)
  void validate(double sigma) const;
};

// Which curvature enters the diagonal of the block operator that generates
// the Gauss-Seidel augmentation.
//  - FullCurvature reproduces the sweeps exactly: the equivalent 2-block
//    proximal term uses diagonal blocks Sigma_hat_i + S_i + sigma A_i A_i^*.
//  - HalfCurvature is the closed-form recipe with 1/2 Sigma_hat_i on the
//    diagonal; it only matches the sweeps when the smooth parts of the
//    swept blocks are linear.
enum class SgsDiagonal { FullCurvature, HalfCurvature };

// Proximal pair (S, T) converting the sweep method into a 2-block method.
std::pair<SelfAdjointOperator, SelfAdjointOperator> build_equivalent_two_block(
    const BlockPartition& part, double sigma, SgsDiagonal diag = SgsDiagonal::FullCurvature);

// The stacked 2-block problem (losses, maps and proxes concatenated).
CompositeProblem to_two_block(const BlockPartition& part);

// Prepared sweep engine; factorizations are built once.
class SgsEngine {
 public:
  SgsEngine(const BlockPartition& part, double sigma,
            LinearSolverKind solver_kind = LinearSolverKind::Auto);

  // Backward sweep over y-blocks s..2, block 1, forward sweep 2..s.
  // Gradients are frozen at state.y for the whole sweep.
  Vector sweep_y(const IterateState& state) const;
  // Mirror on the z-blocks, with y already advanced to y_new.
  Vector sweep_z(const IterateState& state, const Vector& y_new) const;

  const BlockPartition& partition() const { return *part_; }

 private:
  Vector run_sweep(const std::vector<SubproblemSolver>& solvers, bool y_side,
                   const Vector& frozen, const Vector& other_constraint,
                   const Vector& x) const;

  std::shared_ptr<const BlockPartition> part_;
  double sigma_;
  std::vector<SubproblemSolver> y_solvers_;
  std::vector<SubproblemSolver> z_solvers_;
  std::vector<Index> y_offsets_, z_offsets_;
};

// convenience single-shot sweeps
Vector sgs_sweep_y(const BlockPartition& part, double sigma, const IterateState& state);
Vector sgs_sweep_z(const BlockPartition& part, double sigma, const IterateState& state,
                   const Vector& y_new);

// Full multi-block solve (the sweep scheme with the dual update).
SolveResult solve_sgs(const BlockPartition& part, const SolverConfig& cfg, IterateState start,
                      const SolveOptions& options = {});

}  // namespace madmm
