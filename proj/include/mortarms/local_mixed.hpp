#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "mortarms/field.hpp"
#include "mortarms/geometry.hpp"

namespace mortarms {

// Lowest-order mixed discretization on square cells, hybridized: each cell
// carries four constant-normal-flux velocity DOFs (local order L,R,B,T; the
// coefficient is the outward normal flux density on that side) and one
// pressure DOF, and each edge carries one constant Lagrange multiplier (the
// pressure trace).  Velocity and pressure are eliminated cell by cell, which
// leaves a symmetric positive definite system in the interior multipliers:
// per cell the condensed matrix is kappa-scaled and mesh-size independent,
// and a prescribed multiplier value on a set boundary moves to the
// right-hand side as Dirichlet data.

// Velocity mass matrix (kappa^-1 q, v) of one h x h cell.
Eigen::Matrix4d cell_velocity_mass(double kappa, double h);
// Condensed multiplier matrix of one cell (independent of h).
Eigen::Matrix4d cell_condensed_matrix(double kappa);

struct LocalFields {
    Eigen::VectorXd lambda_interior;  // per interior edge of the set, ascending edge order
    Eigen::VectorXd pressure;         // per local cell
    Eigen::MatrixXd flux;             // local cells x 4, outward coefficients (L,R,B,T)
    Eigen::VectorXd boundary_flux;    // per boundary edge, outward from the set
};

// Factorized Dirichlet solver on an arbitrary set of fine cells.  Immutable
// after construction; solves are const and safe to run concurrently.
class CellSetSolver {
  public:
    CellSetSolver(const GridGeometry& geom, const PermeabilityField& kappa, std::vector<int> cells);

    const std::vector<int>& cells() const { return cells_; }
    const std::vector<int>& interior_edges() const { return interior_edges_; }
    const std::vector<int>& boundary_edges() const { return boundary_edges_; }
    int num_cells() const { return static_cast<int>(cells_.size()); }

    int local_cell_index(int global_cell) const;
    int local_interior_index(int global_edge) const;
    int local_boundary_index(int global_edge) const;

    // boundary_values: multiplier data per boundary edge (boundary_edges()
    // order); cell_source: source density per local cell (cells() order).
    LocalFields solve(const Eigen::VectorXd& boundary_values, const Eigen::VectorXd& cell_source) const;

    // Interior multipliers for many zero-source Dirichlet problems at once:
    // column j of the result solves boundary data boundary_columns.col(j).
    Eigen::MatrixXd solve_interior_multi(const Eigen::MatrixXd& boundary_columns) const;

    const GridGeometry& geometry() const { return *geom_; }

  private:
    const GridGeometry* geom_;
    std::vector<int> cells_;
    std::vector<double> kappa_;          // per local cell
    std::vector<int> interior_edges_;    // global ids, ascending
    std::vector<int> boundary_edges_;    // global ids, ascending
    // Per local cell and side: interior index i encoded as i, boundary index
    // b encoded as -1-b.
    std::vector<std::array<int, 4>> edge_codes_;
    std::vector<int> boundary_cell_;     // local cell adjacent to each boundary edge
    std::vector<int> boundary_side_;     // that cell's side (0..3) on the boundary edge
    Eigen::SparseMatrix<double> coupling_;  // interior x boundary block of the condensed matrix
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;

    void recover(const Eigen::VectorXd& lambda_interior, const Eigen::VectorXd& boundary_values,
                 const Eigen::VectorXd& cell_source, LocalFields& out) const;
};

// One coarse block's solver plus its index.
struct LocalBlockSolver {
    int block = -1;
    CellSetSolver solver;
};

struct LocalSolution {
    int block = -1;
    LocalFields fields;
};

// Builds the factorized solver of block b.  Throws std::runtime_error on a
// singular factorization (never happens for positive kappa).
LocalBlockSolver assemble_block(const GridGeometry& geom, const PermeabilityField& kappa, int block);

// Zero mortar data, source f restricted to the block.
LocalSolution solve_source_part(const LocalBlockSolver& blk, const SourceField& f);
// Zero source, prescribed mortar trace per block-boundary edge
// (solver.boundary_edges() order).
LocalSolution solve_mortar_part(const LocalBlockSolver& blk, const Eigen::VectorXd& boundary_trace);
// Both at once.
LocalSolution solve_block(const LocalBlockSolver& blk, const Eigen::VectorXd& boundary_trace, const SourceField& f);

struct GlobalSolution {
    Eigen::MatrixXd flux;     // cells x 4 outward coefficients
    Eigen::VectorXd pressure; // per cell
    Eigen::VectorXd lambda;   // per fine edge; zero on the domain boundary
};

// Reference fine solver: one sparse factorization of the full condensed
// multiplier system.  Intended for modest grids (Nf up to a few hundred).
GlobalSolution monolithic_fine_solve(const GridGeometry& geom, const PermeabilityField& kappa, const SourceField& f);

// Largest relative violation of per-cell mass balance: the algebraic
// divergence of the flux must equal the cell-averaged source times the cell
// area.  The scale guards cells whose fluxes dwarf their source.
double max_conservation_violation(const GridGeometry& geom, const GlobalSolution& sol, const SourceField& f);

}  // namespace mortarms
