#include "mortarms/interface.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "mortarms/parallel.hpp"

namespace mortarms {

InterfaceOperator::InterfaceOperator(const GridGeometry& geom, PermeabilityField kappa, int threads)
    : geom_(&geom), kappa_(std::move(kappa)), threads_(threads) {
    if (kappa_.values.size() != geom.num_cells()) {
        throw std::invalid_argument("permeability has " + std::to_string(kappa_.values.size()) +
                                    " cells, geometry has " + std::to_string(geom.num_cells()));
    }
    const int nb = geom.num_blocks();
    std::vector<std::unique_ptr<LocalBlockSolver>> built(nb);
    parallel_for(static_cast<std::size_t>(nb), threads_, [&](std::size_t b) {
        built[b] = std::make_unique<LocalBlockSolver>(mortarms::assemble_block(geom, kappa_, static_cast<int>(b)));
    });
    blocks_.reserve(nb);
    boundary_dofs_.resize(nb);
    for (int b = 0; b < nb; ++b) {
        blocks_.push_back(std::move(*built[b]));
        const auto& edges = blocks_[b].solver.boundary_edges();
        auto& dofs = boundary_dofs_[b];
        dofs.resize(edges.size());
        for (std::size_t k = 0; k < edges.size(); ++k) dofs[k] = geom.skeleton_dof_of_edge[edges[k]];
    }
}

Eigen::VectorXd InterfaceOperator::gather_block_trace(int b, const Eigen::VectorXd& xi) const {
    const auto& dofs = boundary_dofs_[b];
    Eigen::VectorXd trace = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t k = 0; k < dofs.size(); ++k) {
        if (dofs[k] >= 0) trace[static_cast<Eigen::Index>(k)] = xi[dofs[k]];
    }
    return trace;
}

void InterfaceOperator::scatter_flux(int b, const Eigen::VectorXd& boundary_flux, double sign,
                                     Eigen::VectorXd& out) const {
    const double h = geom_->edge_length();
    const auto& dofs = boundary_dofs_[b];
    for (std::size_t k = 0; k < dofs.size(); ++k) {
        if (dofs[k] >= 0) out[dofs[k]] += sign * h * boundary_flux[static_cast<Eigen::Index>(k)];
    }
}

namespace {

Eigen::VectorXd apply_impl(const InterfaceOperator& op, const Eigen::VectorXd& xi, int threads,
                           const std::vector<std::vector<int>>& boundary_dofs) {
    const GridGeometry& geom = op.geometry();
    if (xi.size() != geom.num_skeleton_dofs()) {
        throw std::invalid_argument("mortar vector has " + std::to_string(xi.size()) + " entries, skeleton has " +
                                    std::to_string(geom.num_skeleton_dofs()));
    }
    const int nb = geom.num_blocks();
    std::vector<Eigen::VectorXd> flux(nb);
    parallel_for(static_cast<std::size_t>(nb), threads, [&](std::size_t bi) {
        const int b = static_cast<int>(bi);
        const auto& dofs = boundary_dofs[b];
        Eigen::VectorXd trace = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.size()));
        bool active = false;
        for (std::size_t k = 0; k < dofs.size(); ++k) {
            if (dofs[k] >= 0 && xi[dofs[k]] != 0.0) {
                trace[static_cast<Eigen::Index>(k)] = xi[dofs[k]];
                active = true;
            }
        }
        if (!active) return;
        flux[b] = solve_mortar_part(op.block(b), trace).fields.boundary_flux;
    });
    Eigen::VectorXd out = Eigen::VectorXd::Zero(xi.size());
    const double h = geom.edge_length();
    for (int b = 0; b < nb; ++b) {
        if (flux[b].size() == 0) continue;
        const auto& dofs = boundary_dofs[b];
        for (std::size_t k = 0; k < dofs.size(); ++k) {
            if (dofs[k] >= 0) out[dofs[k]] -= h * flux[b][static_cast<Eigen::Index>(k)];
        }
    }
    return out;
}

}  // namespace

Eigen::VectorXd InterfaceOperator::apply(const Eigen::VectorXd& xi) const {
    return apply_impl(*this, xi, threads_, boundary_dofs_);
}

Eigen::VectorXd InterfaceOperator::apply_serial(const Eigen::VectorXd& xi) const {
    return apply_impl(*this, xi, 1, boundary_dofs_);
}

Eigen::VectorXd InterfaceOperator::rhs(const SourceField& f) const {
    if (f.values.size() != geom_->num_cells()) {
        throw std::invalid_argument("source has " + std::to_string(f.values.size()) + " cells, geometry has " +
                                    std::to_string(geom_->num_cells()));
    }
    const int nb = geom_->num_blocks();
    std::vector<Eigen::VectorXd> flux(nb);
    parallel_for(static_cast<std::size_t>(nb), threads_, [&](std::size_t b) {
        flux[b] = solve_source_part(blocks_[b], f).fields.boundary_flux;
    });
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
    for (int b = 0; b < nb; ++b) scatter_flux(b, flux[b], +1.0, out);
    return out;
}

Eigen::MatrixXd InterfaceOperator::assemble_block(const std::vector<int>& dofs) const {
    const int k = static_cast<int>(dofs.size());
    for (int d : dofs) {
        if (d < 0 || d >= dim()) throw std::invalid_argument("mortar DOF " + std::to_string(d) + " out of range");
    }
    Eigen::MatrixXd out(k, k);
    parallel_for(static_cast<std::size_t>(k), threads_, [&](std::size_t j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(dim());
        e[dofs[j]] = 1.0;
        const Eigen::VectorXd col = apply_serial(e);
        for (int i = 0; i < k; ++i) out(i, static_cast<Eigen::Index>(j)) = col[dofs[i]];
    });
    return out;
}

Eigen::MatrixXd InterfaceOperator::assemble_dense() const {
    std::vector<int> all(static_cast<std::size_t>(dim()));
    for (int i = 0; i < dim(); ++i) all[static_cast<std::size_t>(i)] = i;
    return assemble_block(all);
}

GlobalSolution InterfaceOperator::recover(const Eigen::VectorXd& xi, const SourceField& f) const {
    if (xi.size() != dim()) {
        throw std::invalid_argument("mortar vector has " + std::to_string(xi.size()) + " entries, skeleton has " +
                                    std::to_string(dim()));
    }
    if (f.values.size() != geom_->num_cells()) {
        throw std::invalid_argument("source has " + std::to_string(f.values.size()) + " cells, geometry has " +
                                    std::to_string(geom_->num_cells()));
    }
    GlobalSolution g;
    g.flux = Eigen::MatrixXd::Zero(geom_->num_cells(), 4);
    g.pressure = Eigen::VectorXd::Zero(geom_->num_cells());
    g.lambda = Eigen::VectorXd::Zero(geom_->num_fine_edges());
    for (int d = 0; d < dim(); ++d) g.lambda[geom_->edge_of_skeleton_dof[d]] = xi[d];
    const int nb = geom_->num_blocks();
    parallel_for(static_cast<std::size_t>(nb), threads_, [&](std::size_t b) {
        const LocalBlockSolver& blk = blocks_[b];
        const LocalSolution sol = solve_block(blk, gather_block_trace(static_cast<int>(b), xi), f);
        const auto& cells = blk.solver.cells();
        for (std::size_t lc = 0; lc < cells.size(); ++lc) {
            g.flux.row(cells[lc]) = sol.fields.flux.row(static_cast<Eigen::Index>(lc));
            g.pressure[cells[lc]] = sol.fields.pressure[static_cast<Eigen::Index>(lc)];
        }
        const auto& interior = blk.solver.interior_edges();
        for (std::size_t k = 0; k < interior.size(); ++k) {
            g.lambda[interior[k]] = sol.fields.lambda_interior[static_cast<Eigen::Index>(k)];
        }
    });
    return g;
}

MortarVector apply_interface(const InterfaceOperator& op, const MortarVector& xi) {
    if (xi.space != MortarVector::Space::fine) {
        throw std::invalid_argument("interface operator acts on fine mortar vectors");
    }
    return MortarVector{MortarVector::Space::fine, op.apply(xi.v)};
}

MortarVector interface_rhs(const InterfaceOperator& op, const SourceField& f) {
    return MortarVector{MortarVector::Space::fine, op.rhs(f)};
}

GalerkinOperator::GalerkinOperator(const InterfaceOperator& op, Eigen::MatrixXd prolongation)
    : op_(&op), R_(std::move(prolongation)) {
    if (R_.rows() != op.dim()) {
        throw std::invalid_argument("prolongation has " + std::to_string(R_.rows()) + " rows, skeleton has " +
                                    std::to_string(op.dim()));
    }
}

Eigen::VectorXd GalerkinOperator::apply(const Eigen::VectorXd& xi_coarse) const {
    if (xi_coarse.size() != R_.cols()) {
        throw std::invalid_argument("coarse vector has " + std::to_string(xi_coarse.size()) + " entries, space has " +
                                    std::to_string(R_.cols()));
    }
    return R_.transpose() * op_->apply(R_ * xi_coarse);
}

Eigen::MatrixXd assemble_coarse_matrix(const InterfaceOperator& op, const Eigen::MatrixXd& prolongation) {
    if (prolongation.rows() != op.dim()) {
        throw std::invalid_argument("prolongation has " + std::to_string(prolongation.rows()) +
                                    " rows, skeleton has " + std::to_string(op.dim()));
    }
    const Eigen::Index nc = prolongation.cols();
    Eigen::MatrixXd out(nc, nc);
    parallel_for(static_cast<std::size_t>(nc), op.threads(), [&](std::size_t j) {
        out.col(static_cast<Eigen::Index>(j)) =
            prolongation.transpose() * op.apply_serial(prolongation.col(static_cast<Eigen::Index>(j)));
    });
    return out;
}

ErrorReport error_metrics(const GridGeometry& geom, const PermeabilityField& kappa, const GlobalSolution& approx,
                          const GlobalSolution& reference) {
    const int nc = geom.num_cells();
    if (approx.pressure.size() != nc || reference.pressure.size() != nc || approx.flux.rows() != nc ||
        reference.flux.rows() != nc || kappa.values.size() != nc) {
        throw std::invalid_argument("solution fields do not match the geometry");
    }
    const double h = geom.h;
    double num_u = 0.0, den_u = 0.0, num_q = 0.0, den_q = 0.0;
    for (int c = 0; c < nc; ++c) {
        const double du = approx.pressure[c] - reference.pressure[c];
        num_u += h * h * du * du;
        den_u += h * h * reference.pressure[c] * reference.pressure[c];
        const Eigen::Matrix4d m = cell_velocity_mass(kappa.values[c], h);
        const Eigen::Vector4d dq = (approx.flux.row(c) - reference.flux.row(c)).transpose();
        const Eigen::Vector4d qr = reference.flux.row(c).transpose();
        num_q += dq.dot(m * dq);
        den_q += qr.dot(m * qr);
    }
    if (den_u == 0.0) throw std::invalid_argument("reference pressure is identically zero");
    if (den_q == 0.0) throw std::invalid_argument("reference flux is identically zero");
    ErrorReport r;
    r.e_u = std::sqrt(num_u / den_u);
    r.e_q = std::sqrt(num_q / den_q);
    return r;
}

}  // namespace mortarms
