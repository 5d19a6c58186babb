#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mortarms/interface.hpp"
#include "mortarms/mortar_basis.hpp"

namespace mortarms {

// Krylov solvers and the two-level interface preconditioners: a coarse
// component built on the mortar basis and a local component built from
// edgewise blocks of the interface operator, composed additively or through
// coarse-space projections.

using ApplyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct KrylovReport {
    std::string method;                    // "PCG" or "GMRES(m)"
    int iterations = 0;                    // PCG steps; GMRES restart cycles
    int inner_iterations = 0;              // GMRES total inner steps; equals iterations for PCG
    std::vector<double> residual_history;  // relative residual norms, first entry 1
    bool converged = false;
    bool stagnated = false;                // GMRES cycle made no progress
};

// Preconditioned conjugate gradients with zero initial guess.  Stops when
// the relative residual norm drops to tol (the recursive residual triggers
// the check, a recomputed true residual confirms it).  Throws
// std::runtime_error on nonpositive curvature or a nonpositive
// preconditioned inner product, the signatures of a nonsymmetric or
// indefinite operator.
std::pair<Eigen::VectorXd, KrylovReport> pcg(const ApplyFn& apply_a, const ApplyFn& apply_m,
                                             const Eigen::VectorXd& b, double tol = 1e-7, int maxit = 1000);

// Right-preconditioned restarted GMRES with zero initial guess; solves
// A M^-1 u = b and returns x = M^-1 u.  `iterations` counts restart cycles,
// at most maxit of them.  The stagnation flag is set (and the solve stops)
// when a full cycle reduces the residual by less than a factor 1e-14.
std::pair<Eigen::VectorXd, KrylovReport> gmres_restarted(const ApplyFn& apply_a, const ApplyFn& apply_m,
                                                         const Eigen::VectorXd& b, int m = 2, double tol = 1e-7,
                                                         int maxit = 1000);

// Galerkin coarse solve R0 A0^-1 R0^T with A0 = R0^T A R0 assembled dense.
class CoarsePreconditioner {
  public:
    CoarsePreconditioner(const InterfaceOperator& op, Eigen::MatrixXd prolongation);

    Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
    int coarse_dim() const { return static_cast<int>(R0_.cols()); }
    const Eigen::MatrixXd& prolongation() const { return R0_; }
    const Eigen::MatrixXd& coarse_matrix() const { return A0_; }

  private:
    Eigen::MatrixXd R0_;
    Eigen::MatrixXd A0_;
    Eigen::LDLT<Eigen::MatrixXd> factor_;
};

// Edgewise block solves.  For each interior coarse edge, the gather set is
// every skeleton DOF inside the edge's oversample region and the scatter set
// is the edge's own DOFs; with a padded region the two differ and the
// operator is nonsymmetric (restrictive mode, GMRES only).
class LocalPreconditioner {
  public:
    LocalPreconditioner(const InterfaceOperator& op, const OversampleSpec& spec, int threads = 1);

    Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
    bool restrictive() const { return restrictive_; }
    const OversampleSpec& spec() const { return spec_; }
    const std::vector<int>& gather_dofs(int edge) const { return blocks_[edge].gather; }

  private:
    struct EdgeBlock {
        std::vector<int> gather;       // E_i^+, ascending skeleton DOFs
        std::vector<int> scatter_pos;  // positions of the edge's own DOFs within gather
        Eigen::LDLT<Eigen::MatrixXd> factor;
    };
    const GridGeometry* geom_;
    OversampleSpec spec_;
    int threads_;
    bool restrictive_ = false;
    std::vector<EdgeBlock> blocks_;
};

enum class Composition { additive, hybrid, hybrid_literal };

// additive:       B0^-1 r + Bloc^-1 r
// hybrid:         B0^-1 r + (I - B0^-1 A) Bloc^-1 (I - A B0^-1) r
// hybrid_literal: C r + (I - C) Bloc^-1 (I - C) r with C = R0 A0^-1 R0^T,
//                 the composition with C used directly as a projector.
class TwoLevelPreconditioner {
  public:
    TwoLevelPreconditioner(const InterfaceOperator& op, const CoarsePreconditioner& coarse,
                           const LocalPreconditioner& local, Composition comp);

    Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
    Composition composition() const { return comp_; }
    // Symmetry of the composed operator; PCG requires this.
    bool symmetric() const { return !local_->restrictive(); }

  private:
    const InterfaceOperator* op_;
    const CoarsePreconditioner* coarse_;
    const LocalPreconditioner* local_;
    Composition comp_;
};

}  // namespace mortarms
