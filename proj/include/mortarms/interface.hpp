#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mortarms/local_mixed.hpp"

namespace mortarms {

// Interface flux operator on the coarse skeleton.  With blocks solved
// exactly for given mortar data, A maps a mortar trace to the pairing of the
// resulting inter-block flux mismatch with each fine-mortar basis function
// (edge-length weighted).  The orientation is chosen so that A is symmetric
// positive definite: A xi equals minus the outward-flux jump of the
// zero-source local solves, and the right-hand side is plus the jump of the
// zero-trace source solves, so A xi = g enforces a zero total jump.  A then
// coincides with the Schur complement of the fine system condensed onto the
// skeleton multipliers.

struct MortarVector {
    enum class Space { fine, coarse };
    Space space = Space::fine;
    Eigen::VectorXd v;
};

class InterfaceOperator {
  public:
    InterfaceOperator(const GridGeometry& geom, PermeabilityField kappa, int threads = 1);

    int dim() const { return geom_->num_skeleton_dofs(); }
    const GridGeometry& geometry() const { return *geom_; }
    const PermeabilityField& permeability() const { return kappa_; }
    const LocalBlockSolver& block(int b) const { return blocks_[b]; }
    int threads() const { return threads_; }

    // Matrix-free action on a fine mortar vector.  Blocks whose boundary
    // data vanish are skipped; contributions accumulate in block order, so
    // results are independent of the thread count.
    Eigen::VectorXd apply(const Eigen::VectorXd& xi) const;
    // Same action computed entirely on the calling thread; for callers that
    // already parallelize over many applies.
    Eigen::VectorXd apply_serial(const Eigen::VectorXd& xi) const;

    // Reduced right-hand side of the interface problem for source f.
    Eigen::VectorXd rhs(const SourceField& f) const;

    // Principal submatrix A[dofs,dofs] probed with unit vectors; each probe
    // only solves the one or two blocks adjacent to the probed edge.
    Eigen::MatrixXd assemble_block(const std::vector<int>& dofs) const;
    Eigen::MatrixXd assemble_dense() const;

    // Block-by-block reconstruction of (q,u,lambda) from interface data and
    // the source.
    GlobalSolution recover(const Eigen::VectorXd& xi, const SourceField& f) const;

  private:
    const GridGeometry* geom_;
    PermeabilityField kappa_;
    int threads_;
    std::vector<LocalBlockSolver> blocks_;
    // Per block, per boundary edge of that block: the skeleton DOF, or -1 on
    // the domain boundary.
    std::vector<std::vector<int>> boundary_dofs_;

    Eigen::VectorXd gather_block_trace(int b, const Eigen::VectorXd& xi) const;
    void scatter_flux(int b, const Eigen::VectorXd& boundary_flux, double sign, Eigen::VectorXd& out) const;
};

// Tag-checked wrappers over the Eigen-level methods.
MortarVector apply_interface(const InterfaceOperator& op, const MortarVector& xi);
MortarVector interface_rhs(const InterfaceOperator& op, const SourceField& f);

// Coarse-space action xi_c -> R^T A (R xi_c) for a prolongation R whose
// columns live in the fine mortar space.
class GalerkinOperator {
  public:
    GalerkinOperator(const InterfaceOperator& op, Eigen::MatrixXd prolongation);
    int dim() const { return static_cast<int>(R_.cols()); }
    Eigen::VectorXd apply(const Eigen::VectorXd& xi_coarse) const;
    const Eigen::MatrixXd& prolongation() const { return R_; }

  private:
    const InterfaceOperator* op_;
    Eigen::MatrixXd R_;
};

// Dense Galerkin matrix R^T A R, assembled column by column.
Eigen::MatrixXd assemble_coarse_matrix(const InterfaceOperator& op, const Eigen::MatrixXd& prolongation);

struct ErrorReport {
    double e_u = 0.0;
    double e_q = 0.0;
};

// Relative L2 pressure error and relative kappa^-1-weighted L2 flux error of
// `approx` against `reference`.  Throws std::invalid_argument when the
// reference pressure or flux is identically zero.
ErrorReport error_metrics(const GridGeometry& geom, const PermeabilityField& kappa, const GlobalSolution& approx,
                          const GlobalSolution& reference);

}  // namespace mortarms
