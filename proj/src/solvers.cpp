#include "mortarms/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mortarms/parallel.hpp"

namespace mortarms {

namespace {

std::pair<Eigen::VectorXd, KrylovReport> trivial_zero_solve(std::string method, Eigen::Index dim) {
    KrylovReport rep;
    rep.method = std::move(method);
    rep.residual_history = {1.0, 0.0};
    rep.converged = true;
    return {Eigen::VectorXd::Zero(dim), rep};
}

}  // namespace

std::pair<Eigen::VectorXd, KrylovReport> pcg(const ApplyFn& apply_a, const ApplyFn& apply_m,
                                             const Eigen::VectorXd& b, double tol, int maxit) {
    KrylovReport rep;
    rep.method = "PCG";
    const double bnorm = b.norm();
    if (bnorm == 0.0) return trivial_zero_solve(rep.method, b.size());
    rep.residual_history.push_back(1.0);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = apply_m(r);
    double rz = r.dot(z);
    if (rz <= 0.0) throw std::runtime_error("preconditioner is not positive definite");
    Eigen::VectorXd p = z;

    while (rep.iterations < maxit) {
        const Eigen::VectorXd ap = apply_a(p);
        const double pap = p.dot(ap);
        if (pap <= 0.0) throw std::runtime_error("nonpositive curvature: operator is not symmetric positive definite");
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        ++rep.iterations;
        const double rel = r.norm() / bnorm;
        if (rel <= tol) {
            // The recursive residual can drift from b - A x; confirm with
            // the true one and keep iterating from it if needed.
            const Eigen::VectorXd rt = b - apply_a(x);
            const double rel_true = rt.norm() / bnorm;
            rep.residual_history.push_back(rel_true);
            if (rel_true <= tol) {
                rep.converged = true;
                break;
            }
            r = rt;
            z = apply_m(r);
            rz = r.dot(z);
            if (rz <= 0.0) throw std::runtime_error("preconditioner is not positive definite");
            p = z;
            continue;
        }
        rep.residual_history.push_back(rel);
        z = apply_m(r);
        const double rz_next = r.dot(z);
        if (rz_next <= 0.0) throw std::runtime_error("preconditioner is not positive definite");
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    rep.inner_iterations = rep.iterations;
    return {std::move(x), rep};
}

std::pair<Eigen::VectorXd, KrylovReport> gmres_restarted(const ApplyFn& apply_a, const ApplyFn& apply_m,
                                                         const Eigen::VectorXd& b, int m, double tol, int maxit) {
    if (m < 1) throw std::invalid_argument("restart length must be at least 1");
    KrylovReport rep;
    rep.method = "GMRES(" + std::to_string(m) + ")";
    const double bnorm = b.norm();
    if (bnorm == 0.0) return trivial_zero_solve(rep.method, b.size());
    rep.residual_history.push_back(1.0);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    double rel = 1.0;

    while (rep.iterations < maxit && rel > tol) {
        ++rep.iterations;
        const double beta = r.norm();
        Eigen::MatrixXd v(b.size(), m + 1);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m + 1, m);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
        Eigen::VectorXd cs(m), sn(m);
        v.col(0) = r / beta;
        g[0] = beta;
        int k_used = 0;
        for (int k = 0; k < m; ++k) {
            ++rep.inner_iterations;
            k_used = k + 1;
            Eigen::VectorXd w = apply_a(apply_m(v.col(k)));
            for (int i = 0; i <= k; ++i) {
                hess(i, k) = v.col(i).dot(w);
                w -= hess(i, k) * v.col(i);
            }
            // One re-orthogonalization pass keeps the basis usable near
            // convergence.
            for (int i = 0; i <= k; ++i) {
                const double corr = v.col(i).dot(w);
                hess(i, k) += corr;
                w -= corr * v.col(i);
            }
            hess(k + 1, k) = w.norm();
            const bool lucky = hess(k + 1, k) <= 1e-300;
            if (!lucky) v.col(k + 1) = w / hess(k + 1, k);
            for (int i = 0; i < k; ++i) {
                const double t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
                hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
                hess(i, k) = t;
            }
            const double denom = std::hypot(hess(k, k), hess(k + 1, k));
            cs[k] = denom == 0.0 ? 1.0 : hess(k, k) / denom;
            sn[k] = denom == 0.0 ? 0.0 : hess(k + 1, k) / denom;
            hess(k, k) = denom;
            hess(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            if (lucky || std::abs(g[k + 1]) / bnorm <= tol) break;
        }
        Eigen::VectorXd y = hess.topLeftCorner(k_used, k_used)
                                .triangularView<Eigen::Upper>()
                                .solve(g.head(k_used));
        x += apply_m(v.leftCols(k_used) * y);
        r = b - apply_a(x);
        const double rel_next = r.norm() / bnorm;
        rep.residual_history.push_back(rel_next);
        if (rel_next <= tol) {
            rep.converged = true;
            rel = rel_next;
            break;
        }
        if (rel - rel_next < 1e-14 * rel) {
            rep.stagnated = true;
            rel = rel_next;
            break;
        }
        rel = rel_next;
    }
    return {std::move(x), rep};
}

CoarsePreconditioner::CoarsePreconditioner(const InterfaceOperator& op, Eigen::MatrixXd prolongation)
    : R0_(std::move(prolongation)) {
    if (R0_.rows() != op.dim() || R0_.cols() < 1) {
        throw std::invalid_argument("prolongation shape does not match the interface operator");
    }
    A0_ = assemble_coarse_matrix(op, R0_);
    // Probing accumulates block-solve roundoff that grows with the
    // permeability contrast, so only gross asymmetry signals misuse.
    const double scale = std::max(A0_.cwiseAbs().maxCoeff(), 1e-300);
    if ((A0_ - A0_.transpose()).cwiseAbs().maxCoeff() > 1e-6 * scale) {
        throw std::runtime_error("coarse matrix is not symmetric");
    }
    A0_ = 0.5 * (A0_ + A0_.transpose().eval());
    factor_.compute(A0_);
    if (factor_.info() != Eigen::Success || !(factor_.vectorD().array() > 0.0).all()) {
        throw std::runtime_error("coarse matrix is not positive definite; basis columns may be dependent");
    }
}

Eigen::VectorXd CoarsePreconditioner::apply(const Eigen::VectorXd& r) const {
    if (r.size() != R0_.rows()) throw std::invalid_argument("residual length does not match the skeleton");
    return R0_ * factor_.solve(R0_.transpose() * r);
}

LocalPreconditioner::LocalPreconditioner(const InterfaceOperator& op, const OversampleSpec& spec, int threads)
    : geom_(&op.geometry()), spec_(spec), threads_(threads) {
    const GridGeometry& geom = *geom_;
    const int n = geom.n;
    blocks_.resize(static_cast<std::size_t>(geom.num_coarse_edges()));
    for (int e = 0; e < geom.num_coarse_edges(); ++e) {
        EdgeBlock& blk = blocks_[static_cast<std::size_t>(e)];
        blk.gather = edge_skeleton_dofs(geom, oversample_region(geom, e, spec_));
        blk.scatter_pos.resize(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) {
            const int dof = e * n + t;
            const auto it = std::lower_bound(blk.gather.begin(), blk.gather.end(), dof);
            if (it == blk.gather.end() || *it != dof) {
                throw std::runtime_error("oversample region of edge " + std::to_string(e) +
                                         " does not cover the edge itself");
            }
            blk.scatter_pos[static_cast<std::size_t>(t)] = static_cast<int>(it - blk.gather.begin());
        }
        if (blk.gather.size() != static_cast<std::size_t>(n)) restrictive_ = true;
        Eigen::MatrixXd a_i = op.assemble_block(blk.gather);
        const double scale = std::max(a_i.cwiseAbs().maxCoeff(), 1e-300);
        if ((a_i - a_i.transpose()).cwiseAbs().maxCoeff() > 1e-6 * scale) {
            throw std::runtime_error("edge block is not symmetric");
        }
        a_i = 0.5 * (a_i + a_i.transpose().eval());
        blk.factor.compute(a_i);
        if (blk.factor.info() != Eigen::Success || !(blk.factor.vectorD().array() > 0.0).all()) {
            throw std::runtime_error("edge block of edge " + std::to_string(e) + " is not positive definite");
        }
    }
}

Eigen::VectorXd LocalPreconditioner::apply(const Eigen::VectorXd& r) const {
    const GridGeometry& geom = *geom_;
    if (r.size() != geom.num_skeleton_dofs()) throw std::invalid_argument("residual length does not match the skeleton");
    const int n = geom.n;
    const std::size_t ne = blocks_.size();
    std::vector<Eigen::VectorXd> local(ne);
    parallel_for(ne, threads_, [&](std::size_t e) {
        const EdgeBlock& blk = blocks_[e];
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(blk.gather.size()));
        for (std::size_t k = 0; k < blk.gather.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = r[blk.gather[k]];
        local[e] = blk.factor.solve(rhs);
    });
    // Each skeleton DOF belongs to exactly one edge, so the scatter targets
    // are disjoint; the loop order fixes the result bit-for-bit anyway.
    Eigen::VectorXd out = Eigen::VectorXd::Zero(r.size());
    for (std::size_t e = 0; e < ne; ++e) {
        const EdgeBlock& blk = blocks_[e];
        for (int t = 0; t < n; ++t) {
            out[static_cast<Eigen::Index>(e) * n + t] += local[e][blk.scatter_pos[static_cast<std::size_t>(t)]];
        }
    }
    return out;
}

TwoLevelPreconditioner::TwoLevelPreconditioner(const InterfaceOperator& op, const CoarsePreconditioner& coarse,
                                               const LocalPreconditioner& local, Composition comp)
    : op_(&op), coarse_(&coarse), local_(&local), comp_(comp) {
    if (coarse.prolongation().rows() != op.dim()) {
        throw std::invalid_argument("coarse preconditioner does not match the interface operator");
    }
}

Eigen::VectorXd TwoLevelPreconditioner::apply(const Eigen::VectorXd& r) const {
    switch (comp_) {
        case Composition::additive:
            return coarse_->apply(r) + local_->apply(r);
        case Composition::hybrid: {
            const Eigen::VectorXd z = coarse_->apply(r);
            const Eigen::VectorXd w = r - op_->apply(z);
            const Eigen::VectorXd v = local_->apply(w);
            return z + v - coarse_->apply(op_->apply(v));
        }
        case Composition::hybrid_literal: {
            const Eigen::VectorXd z = coarse_->apply(r);
            const Eigen::VectorXd v = local_->apply(r - z);
            return z + v - coarse_->apply(v);
        }
    }
    throw std::logic_error("unknown composition");
}

}  // namespace mortarms
