#include "mortarms/local_mixed.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace mortarms {

namespace {

// Inverse of the dimensionless velocity mass matrix (the 1/3,-1/6 pattern).
const double kGInv[4][4] = {{4, 2, 0, 0}, {2, 4, 0, 0}, {0, 0, 4, 2}, {0, 0, 2, 4}};

}  // namespace

Eigen::Matrix4d cell_velocity_mass(double kappa, double h) {
    if (!(kappa > 0.0)) throw std::invalid_argument("cell permeability must be positive");
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    double s = h * h / kappa;
    m(0, 0) = m(1, 1) = m(2, 2) = m(3, 3) = s / 3.0;
    m(0, 1) = m(1, 0) = m(2, 3) = m(3, 2) = -s / 6.0;
    return m;
}

Eigen::Matrix4d cell_condensed_matrix(double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("cell permeability must be positive");
    Eigen::Matrix4d s;
    s << 2.5, 0.5, -1.5, -1.5,
         0.5, 2.5, -1.5, -1.5,
        -1.5, -1.5, 2.5, 0.5,
        -1.5, -1.5, 0.5, 2.5;
    return kappa * s;
}

CellSetSolver::CellSetSolver(const GridGeometry& geom, const PermeabilityField& kappa, std::vector<int> cells)
    : geom_(&geom), cells_(std::move(cells)) {
    if (kappa.values.size() != geom.num_cells()) throw std::invalid_argument("permeability array size mismatch");
    std::sort(cells_.begin(), cells_.end());
    if (std::adjacent_find(cells_.begin(), cells_.end()) != cells_.end())
        throw std::invalid_argument("cell set contains duplicates");
    if (cells_.empty()) throw std::invalid_argument("cell set is empty");

    kappa_.resize(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        int c = cells_[i];
        if (c < 0 || c >= geom.num_cells()) throw std::invalid_argument("cell index out of range");
        double k = kappa.values[c];
        if (!(k > 0.0)) throw std::invalid_argument("permeability must be positive everywhere");
        kappa_[i] = k;
    }

    // Edges touched once are set boundary, twice interior.
    std::unordered_map<int, int> touch;
    touch.reserve(cells_.size() * 4);
    for (int c : cells_)
        for (int e : geom.cell_edges(c)) ++touch[e];
    for (const auto& [e, cnt] : touch) {
        if (cnt == 1)
            boundary_edges_.push_back(e);
        else
            interior_edges_.push_back(e);
    }
    std::sort(interior_edges_.begin(), interior_edges_.end());
    std::sort(boundary_edges_.begin(), boundary_edges_.end());

    std::unordered_map<int, int> interior_idx, boundary_idx;
    interior_idx.reserve(interior_edges_.size());
    boundary_idx.reserve(boundary_edges_.size());
    for (std::size_t i = 0; i < interior_edges_.size(); ++i) interior_idx[interior_edges_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < boundary_edges_.size(); ++i) boundary_idx[boundary_edges_[i]] = static_cast<int>(i);

    boundary_cell_.assign(boundary_edges_.size(), -1);
    boundary_side_.assign(boundary_edges_.size(), -1);
    edge_codes_.resize(cells_.size());
    for (std::size_t lc = 0; lc < cells_.size(); ++lc) {
        auto edges = geom.cell_edges(cells_[lc]);
        for (int side = 0; side < 4; ++side) {
            auto it = interior_idx.find(edges[side]);
            if (it != interior_idx.end()) {
                edge_codes_[lc][side] = it->second;
            } else {
                int b = boundary_idx.at(edges[side]);
                edge_codes_[lc][side] = -1 - b;
                boundary_cell_[b] = static_cast<int>(lc);
                boundary_side_[b] = side;
            }
        }
    }

    const int ni = static_cast<int>(interior_edges_.size());
    const int nb = static_cast<int>(boundary_edges_.size());
    std::vector<Eigen::Triplet<double>> tii, tib;
    tii.reserve(cells_.size() * 16);
    tib.reserve(cells_.size() * 16);
    for (std::size_t lc = 0; lc < cells_.size(); ++lc) {
        Eigen::Matrix4d s = cell_condensed_matrix(kappa_[lc]);
        for (int a = 0; a < 4; ++a) {
            int ca = edge_codes_[lc][a];
            if (ca < 0) continue;
            for (int b = 0; b < 4; ++b) {
                int cb = edge_codes_[lc][b];
                if (cb >= 0)
                    tii.emplace_back(ca, cb, s(a, b));
                else
                    tib.emplace_back(ca, -1 - cb, s(a, b));
            }
        }
    }
    Eigen::SparseMatrix<double> sii(ni, ni);
    sii.setFromTriplets(tii.begin(), tii.end());
    coupling_.resize(ni, nb);
    coupling_.setFromTriplets(tib.begin(), tib.end());

    if (ni > 0) {
        factor_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        factor_->compute(sii);
        if (factor_->info() != Eigen::Success)
            throw std::runtime_error("singular factorization of the condensed multiplier system");
    }
}

int CellSetSolver::local_cell_index(int global_cell) const {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), global_cell);
    if (it == cells_.end() || *it != global_cell) return -1;
    return static_cast<int>(it - cells_.begin());
}

int CellSetSolver::local_interior_index(int global_edge) const {
    auto it = std::lower_bound(interior_edges_.begin(), interior_edges_.end(), global_edge);
    if (it == interior_edges_.end() || *it != global_edge) return -1;
    return static_cast<int>(it - interior_edges_.begin());
}

int CellSetSolver::local_boundary_index(int global_edge) const {
    auto it = std::lower_bound(boundary_edges_.begin(), boundary_edges_.end(), global_edge);
    if (it == boundary_edges_.end() || *it != global_edge) return -1;
    return static_cast<int>(it - boundary_edges_.begin());
}

void CellSetSolver::recover(const Eigen::VectorXd& lambda_interior, const Eigen::VectorXd& boundary_values,
                            const Eigen::VectorXd& cell_source, LocalFields& out) const {
    const double h = geom_->h;
    const double area = h * h;
    out.pressure.resize(num_cells());
    out.flux.resize(num_cells(), 4);
    out.boundary_flux.setZero(boundary_edges_.size());
    for (int lc = 0; lc < num_cells(); ++lc) {
        double lam[4];
        for (int side = 0; side < 4; ++side) {
            int code = edge_codes_[lc][side];
            lam[side] = code >= 0 ? lambda_interior[code] : boundary_values[-1 - code];
        }
        double kap = kappa_[lc];
        double rhs_cell = cell_source[lc] * area;
        double u = (rhs_cell + 6.0 * kap * (lam[0] + lam[1] + lam[2] + lam[3])) / (24.0 * kap);
        out.pressure[lc] = u;
        double qs[4];
        for (int side = 0; side < 4; ++side) {
            double q = 0.0;
            for (int b = 0; b < 4; ++b) q += kGInv[side][b] * (u - lam[b]);
            qs[side] = q * kap / h;
        }
        // The multiplier data carries rounding at working precision, which
        // the kappa/h scaling can amplify far above the discretization
        // level.  The exact solve balances every cell, so the leftover is
        // pure roundoff; return it to the edges in equal shares to keep the
        // cell balance exact.
        const double resid = (rhs_cell - h * (qs[0] + qs[1] + qs[2] + qs[3])) / (4.0 * h);
        for (int side = 0; side < 4; ++side) {
            const double q = qs[side] + resid;
            out.flux(lc, side) = q;
            int code = edge_codes_[lc][side];
            if (code < 0) out.boundary_flux[-1 - code] = q;
        }
    }
    out.lambda_interior = lambda_interior;
}

LocalFields CellSetSolver::solve(const Eigen::VectorXd& boundary_values, const Eigen::VectorXd& cell_source) const {
    if (boundary_values.size() != static_cast<Eigen::Index>(boundary_edges_.size()))
        throw std::invalid_argument("boundary data size mismatch");
    if (cell_source.size() != num_cells()) throw std::invalid_argument("cell source size mismatch");
    const int ni = static_cast<int>(interior_edges_.size());
    Eigen::VectorXd lambda_interior(ni);
    if (ni > 0) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
        const double area = geom_->h * geom_->h;
        for (int lc = 0; lc < num_cells(); ++lc) {
            double spread = cell_source[lc] * area / 4.0;
            for (int side = 0; side < 4; ++side) {
                int code = edge_codes_[lc][side];
                if (code >= 0) rhs[code] += spread;
            }
        }
        rhs.noalias() -= coupling_ * boundary_values;
        lambda_interior = factor_->solve(rhs);
    }
    LocalFields out;
    recover(lambda_interior, boundary_values, cell_source, out);
    return out;
}

Eigen::MatrixXd CellSetSolver::solve_interior_multi(const Eigen::MatrixXd& boundary_columns) const {
    if (boundary_columns.rows() != static_cast<Eigen::Index>(boundary_edges_.size()))
        throw std::invalid_argument("boundary data row count mismatch");
    const int ni = static_cast<int>(interior_edges_.size());
    if (ni == 0) return Eigen::MatrixXd(0, boundary_columns.cols());
    Eigen::MatrixXd rhs = -(coupling_ * boundary_columns);
    return factor_->solve(rhs);
}

LocalBlockSolver assemble_block(const GridGeometry& geom, const PermeabilityField& kappa, int block) {
    if (block < 0 || block >= geom.num_blocks()) throw std::invalid_argument("block index out of range");
    return LocalBlockSolver{block, CellSetSolver(geom, kappa, geom.block_cells(block))};
}

namespace {

Eigen::VectorXd restrict_source(const CellSetSolver& s, const SourceField& f) {
    if (f.values.size() != s.geometry().num_cells()) throw std::invalid_argument("source array size mismatch");
    Eigen::VectorXd local(s.num_cells());
    for (int lc = 0; lc < s.num_cells(); ++lc) local[lc] = f.values[s.cells()[lc]];
    return local;
}

}  // namespace

LocalSolution solve_source_part(const LocalBlockSolver& blk, const SourceField& f) {
    Eigen::VectorXd zero_trace = Eigen::VectorXd::Zero(blk.solver.boundary_edges().size());
    return LocalSolution{blk.block, blk.solver.solve(zero_trace, restrict_source(blk.solver, f))};
}

LocalSolution solve_mortar_part(const LocalBlockSolver& blk, const Eigen::VectorXd& boundary_trace) {
    Eigen::VectorXd zero_source = Eigen::VectorXd::Zero(blk.solver.num_cells());
    return LocalSolution{blk.block, blk.solver.solve(boundary_trace, zero_source)};
}

LocalSolution solve_block(const LocalBlockSolver& blk, const Eigen::VectorXd& boundary_trace, const SourceField& f) {
    return LocalSolution{blk.block, blk.solver.solve(boundary_trace, restrict_source(blk.solver, f))};
}

GlobalSolution monolithic_fine_solve(const GridGeometry& geom, const PermeabilityField& kappa, const SourceField& f) {
    std::vector<int> all_cells(geom.num_cells());
    for (int c = 0; c < geom.num_cells(); ++c) all_cells[c] = c;
    CellSetSolver whole(geom, kappa, std::move(all_cells));
    Eigen::VectorXd zero_boundary = Eigen::VectorXd::Zero(whole.boundary_edges().size());
    LocalFields fields = whole.solve(zero_boundary, f.values);

    GlobalSolution sol;
    sol.flux = std::move(fields.flux);
    sol.pressure = std::move(fields.pressure);
    sol.lambda.setZero(geom.num_fine_edges());
    const auto& interior = whole.interior_edges();
    for (std::size_t i = 0; i < interior.size(); ++i) sol.lambda[interior[i]] = fields.lambda_interior[i];
    return sol;
}

double max_conservation_violation(const GridGeometry& geom, const GlobalSolution& sol, const SourceField& f) {
    if (sol.flux.rows() != geom.num_cells() || f.values.size() != geom.num_cells())
        throw std::invalid_argument("solution/source size mismatch");
    const double h = geom.h;
    double worst = 0.0;
    for (int c = 0; c < geom.num_cells(); ++c) {
        double outflow = h * (sol.flux(c, 0) + sol.flux(c, 1) + sol.flux(c, 2) + sol.flux(c, 3));
        double target = f.values[c] * h * h;
        double scale = std::max({std::abs(target), h * sol.flux.row(c).cwiseAbs().sum(), 1e-300});
        worst = std::max(worst, std::abs(outflow - target) / scale);
    }
    return worst;
}

}  // namespace mortarms
