#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mortarms/field.hpp"
#include "mortarms/geometry.hpp"

namespace mortarms {

// Construction of the coarse mortar space: one normalized constant per
// interior coarse edge, optionally enriched by dominant modes of local flow
// solves (snapshots reduced by POD) or by Legendre polynomials.  All edge
// inner products are the discrete L2 product of piecewise constants on the
// edge's fine edges, i.e. weight h per fine edge.

enum class MortarBasisType { polynomial, case1, case2, case3, case4 };

// case1/2/3: every boundary fine-edge indicator of the snapshot region
// (region = oversample Domain 1/2/3 of the edge).  case4: n+2 random
// boundary vectors on Domain 2, entries iid uniform(-1,1) from a counter
// keyed by (seed, edge, snapshot, component).
struct SnapshotSet {
    int edge = -1;                        // interior coarse edge index
    Eigen::MatrixXd traces;               // n x columns, one trace per snapshot
    bool randomized = false;
    std::uint64_t seed = 0;
    std::vector<int> domain_cells;        // snapshot region, ascending cell ids
    std::vector<int> negligible_columns;  // columns that are constant on the edge to within 1e-12
};

// Trace on the edge's fine edges of one local Dirichlet solve over `cells`
// with indicator data on the mode-th boundary fine edge (ascending global
// edge order) and zero source.  The region must contain both blocks adjacent
// to the edge.  Building the factorization per call is wasteful; batch
// generation goes through snapshot_space.
Eigen::VectorXd harmonic_snapshot(const GridGeometry& geom, const PermeabilityField& kappa, int edge,
                                  const std::vector<int>& cells, int mode);

SnapshotSet snapshot_space(const GridGeometry& geom, const PermeabilityField& kappa, int edge, MortarBasisType type,
                           std::uint64_t seed);

struct PodResult {
    Eigen::MatrixXd modes;        // n x l, descending eigenvalue order, unit edge-L2 norm
    Eigen::VectorXd eigenvalues;  // full spectrum, descending
};

// Number of eigenvalues of the snapshot correlation operator above
// 1e-12 times the largest.
int pod_rank(const SnapshotSet& snap, double h);

// First l dominant modes of the snapshot correlation operator in the edge L2
// inner product.  Throws std::invalid_argument when l exceeds the numerical
// rank.  Mode signs follow the first-nonzero-component-positive convention.
PodResult pod_reduce(const SnapshotSet& snap, double h, int l);

class MortarBasis {
  public:
    MortarBasis(const GridGeometry& geom, int Nb, std::vector<Eigen::MatrixXd> edge_modes,
                std::vector<std::vector<int>> dropped);

    const GridGeometry& geometry() const { return *geom_; }
    int modes_per_edge() const { return Nb_; }
    int coarse_dim() const { return geom_->num_coarse_edges() * Nb_; }
    // n x Nb, edge-L2 orthonormal, column 0 the normalized constant.
    const Eigen::MatrixXd& edge_modes(int coarse_edge) const { return edge_modes_[coarse_edge]; }
    // Candidate indices discarded during orthogonalization, per edge.
    const std::vector<std::vector<int>>& dropped() const { return dropped_; }

    // Coarse DOF ordering is edge-major: dof = coarse_edge * Nb + mode.
    Eigen::VectorXd prolong(const Eigen::VectorXd& coarse) const;
    Eigen::VectorXd restrict_to_coarse(const Eigen::VectorXd& fine) const;
    Eigen::MatrixXd prolongation_matrix() const;

  private:
    const GridGeometry* geom_;
    int Nb_;
    std::vector<Eigen::MatrixXd> edge_modes_;
    std::vector<std::vector<int>> dropped_;
};

// Per edge: the normalized constant, then the supplied candidate columns
// orthogonalized against all previous modes of that edge, skipping (and
// recording) candidates whose remainder norm falls below 1e-10.  Throws
// std::runtime_error when an edge cannot reach Nb independent modes.
MortarBasis build_mortar_basis(const GridGeometry& geom, const std::vector<Eigen::MatrixXd>& edge_candidates, int Nb);

// Fine-edge averages of the Legendre polynomials of degree 0..Nb-1 on the
// edge, orthonormalized; requires Nb <= n.
Eigen::MatrixXd polynomial_basis_modes(int n, double h, int Nb);

// Complete pipeline for one basis type at Nb modes per edge.  Snapshot
// generation and POD run per edge, parallelized over edges.
MortarBasis build_basis_for_type(const GridGeometry& geom, const PermeabilityField& kappa, MortarBasisType type,
                                 int Nb, std::uint64_t seed, int threads = 1);

}  // namespace mortarms
