#include "mortarms/mortar_basis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mortarms/local_mixed.hpp"
#include "mortarms/parallel.hpp"

namespace mortarms {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Value in (-1, 1) fully determined by the key tuple, independent of call
// order and thread schedule.
double keyed_uniform(std::uint64_t seed, int edge, int snapshot, int component) {
    std::uint64_t k = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
    k = splitmix64(k ^ static_cast<std::uint64_t>(edge));
    k = splitmix64(k ^ static_cast<std::uint64_t>(snapshot));
    k = splitmix64(k ^ static_cast<std::uint64_t>(component));
    const double u = static_cast<double>(k >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

// Rows of the edge's fine edges in the region's interior-multiplier
// numbering.  Every fine edge of a coarse edge must be interior to the
// region, which holds whenever the region contains both adjacent blocks.
std::vector<int> edge_trace_rows(const GridGeometry& geom, const CellSetSolver& solver, int edge) {
    const CoarseEdge& ce = geom.coarse_edges[edge];
    std::vector<int> rows(ce.fine_edges.size());
    for (std::size_t t = 0; t < ce.fine_edges.size(); ++t) {
        const int li = solver.local_interior_index(ce.fine_edges[t]);
        if (li < 0) {
            throw std::invalid_argument("snapshot region does not cover coarse edge " + std::to_string(edge));
        }
        rows[t] = li;
    }
    return rows;
}

OversampleSpec snapshot_domain(MortarBasisType type, int n) {
    switch (type) {
        case MortarBasisType::case1:
            return OversampleSpec::domain(1, n);
        case MortarBasisType::case2:
        case MortarBasisType::case4:
            return OversampleSpec::domain(2, n);
        case MortarBasisType::case3:
            return OversampleSpec::domain(3, n);
        default:
            throw std::invalid_argument("snapshot space requires a snapshot basis type");
    }
}

double edge_dot(double h, const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return h * a.dot(b); }

}  // namespace

Eigen::VectorXd harmonic_snapshot(const GridGeometry& geom, const PermeabilityField& kappa, int edge,
                                  const std::vector<int>& cells, int mode) {
    if (edge < 0 || edge >= geom.num_coarse_edges()) {
        throw std::invalid_argument("coarse edge " + std::to_string(edge) + " out of range");
    }
    const CellSetSolver solver(geom, kappa, cells);
    const int nbnd = static_cast<int>(solver.boundary_edges().size());
    if (mode < 0 || mode >= nbnd) {
        throw std::invalid_argument("boundary mode " + std::to_string(mode) + " out of range, region has " +
                                    std::to_string(nbnd) + " boundary edges");
    }
    const std::vector<int> rows = edge_trace_rows(geom, solver, edge);
    Eigen::VectorXd bc = Eigen::VectorXd::Zero(nbnd);
    bc[mode] = 1.0;
    const LocalFields sol = solver.solve(bc, Eigen::VectorXd::Zero(solver.num_cells()));
    Eigen::VectorXd trace(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) trace[static_cast<Eigen::Index>(t)] = sol.lambda_interior[rows[t]];
    return trace;
}

SnapshotSet snapshot_space(const GridGeometry& geom, const PermeabilityField& kappa, int edge, MortarBasisType type,
                           std::uint64_t seed) {
    if (edge < 0 || edge >= geom.num_coarse_edges()) {
        throw std::invalid_argument("coarse edge " + std::to_string(edge) + " out of range");
    }
    SnapshotSet snap;
    snap.edge = edge;
    snap.seed = seed;
    snap.randomized = (type == MortarBasisType::case4);
    snap.domain_cells = oversample_region(geom, edge, snapshot_domain(type, geom.n));
    const CellSetSolver solver(geom, kappa, snap.domain_cells);
    const int nbnd = static_cast<int>(solver.boundary_edges().size());
    const std::vector<int> rows = edge_trace_rows(geom, solver, edge);

    Eigen::MatrixXd boundary;
    if (snap.randomized) {
        boundary.resize(nbnd, geom.n + 2);
        for (int j = 0; j < boundary.cols(); ++j) {
            for (int k = 0; k < nbnd; ++k) boundary(k, j) = keyed_uniform(seed, edge, j, k);
        }
    } else {
        boundary = Eigen::MatrixXd::Identity(nbnd, nbnd);
    }
    const Eigen::MatrixXd interior = solver.solve_interior_multi(boundary);

    snap.traces.resize(geom.n, boundary.cols());
    for (std::size_t t = 0; t < rows.size(); ++t) snap.traces.row(static_cast<Eigen::Index>(t)) = interior.row(rows[t]);

    double scale = 0.0;
    for (Eigen::Index j = 0; j < snap.traces.cols(); ++j) {
        scale = std::max(scale, snap.traces.col(j).lpNorm<Eigen::Infinity>());
    }
    for (Eigen::Index j = 0; j < snap.traces.cols(); ++j) {
        const Eigen::VectorXd col = snap.traces.col(j);
        const double dev = (col.array() - col.mean()).abs().maxCoeff();
        if (dev <= 1e-12 * scale) snap.negligible_columns.push_back(static_cast<int>(j));
    }
    return snap;
}

namespace {

// Spatial correlation eigendecomposition shared by pod_rank and pod_reduce.
// K = h * T T^T is the correlation operator in the edge L2 inner product
// (the h weights of trial and test function cancel against the h^-1 of the
// Gram inverse for piecewise constants, leaving a single factor h).
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> correlation_eigen(const SnapshotSet& snap, double h) {
    if (h <= 0.0) throw std::invalid_argument("edge weight must be positive");
    const Eigen::MatrixXd K = h * (snap.traces * snap.traces.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    if (es.info() != Eigen::Success) throw std::runtime_error("snapshot correlation eigendecomposition failed");
    return es;
}

int rank_of(const Eigen::VectorXd& ascending) {
    const double lmax = std::max(ascending[ascending.size() - 1], 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < ascending.size(); ++i) {
        if (ascending[i] > 1e-12 * lmax && lmax > 0.0) ++rank;
    }
    return rank;
}

}  // namespace

int pod_rank(const SnapshotSet& snap, double h) { return rank_of(correlation_eigen(snap, h).eigenvalues()); }

PodResult pod_reduce(const SnapshotSet& snap, double h, int l) {
    if (l < 0) throw std::invalid_argument("mode count must be nonnegative");
    const auto es = correlation_eigen(snap, h);
    const Eigen::VectorXd asc = es.eigenvalues();
    const int rank = rank_of(asc);
    if (l > rank) {
        throw std::invalid_argument("requested " + std::to_string(l) + " modes, snapshot rank is " +
                                    std::to_string(rank));
    }
    const Eigen::Index nsz = asc.size();
    PodResult out;
    out.eigenvalues = asc.reverse();
    out.modes.resize(snap.traces.rows(), l);
    const double scale = 1.0 / std::sqrt(h);
    for (int j = 0; j < l; ++j) {
        Eigen::VectorXd mode = es.eigenvectors().col(nsz - 1 - j) * scale;
        for (Eigen::Index i = 0; i < mode.size(); ++i) {
            if (mode[i] != 0.0) {
                if (mode[i] < 0.0) mode = -mode;
                break;
            }
        }
        out.modes.col(j) = mode;
    }
    return out;
}

MortarBasis::MortarBasis(const GridGeometry& geom, int Nb, std::vector<Eigen::MatrixXd> edge_modes,
                         std::vector<std::vector<int>> dropped)
    : geom_(&geom), Nb_(Nb), edge_modes_(std::move(edge_modes)), dropped_(std::move(dropped)) {
    if (Nb_ < 1) throw std::invalid_argument("a mortar basis has at least the constant mode");
    if (static_cast<int>(edge_modes_.size()) != geom.num_coarse_edges()) {
        throw std::invalid_argument("mode list count does not match the coarse edge count");
    }
    for (const auto& m : edge_modes_) {
        if (m.rows() != geom.n || m.cols() != Nb_) throw std::invalid_argument("edge mode matrix has wrong shape");
    }
    if (dropped_.size() != edge_modes_.size()) dropped_.resize(edge_modes_.size());
}

Eigen::VectorXd MortarBasis::prolong(const Eigen::VectorXd& coarse) const {
    if (coarse.size() != coarse_dim()) {
        throw std::invalid_argument("coarse vector has " + std::to_string(coarse.size()) + " entries, space has " +
                                    std::to_string(coarse_dim()));
    }
    // Skeleton DOF = coarse_edge * n + tangential offset, so each edge block
    // is a contiguous segment.
    Eigen::VectorXd fine = Eigen::VectorXd::Zero(geom_->num_skeleton_dofs());
    const int n = geom_->n;
    for (int e = 0; e < geom_->num_coarse_edges(); ++e) {
        fine.segment(static_cast<Eigen::Index>(e) * n, n) = edge_modes_[e] * coarse.segment(static_cast<Eigen::Index>(e) * Nb_, Nb_);
    }
    return fine;
}

Eigen::VectorXd MortarBasis::restrict_to_coarse(const Eigen::VectorXd& fine) const {
    if (fine.size() != geom_->num_skeleton_dofs()) {
        throw std::invalid_argument("fine vector has " + std::to_string(fine.size()) + " entries, skeleton has " +
                                    std::to_string(geom_->num_skeleton_dofs()));
    }
    Eigen::VectorXd coarse(coarse_dim());
    const int n = geom_->n;
    for (int e = 0; e < geom_->num_coarse_edges(); ++e) {
        coarse.segment(static_cast<Eigen::Index>(e) * Nb_, Nb_) =
            edge_modes_[e].transpose() * fine.segment(static_cast<Eigen::Index>(e) * n, n);
    }
    return coarse;
}

Eigen::MatrixXd MortarBasis::prolongation_matrix() const {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(geom_->num_skeleton_dofs(), coarse_dim());
    const int n = geom_->n;
    for (int e = 0; e < geom_->num_coarse_edges(); ++e) {
        R.block(static_cast<Eigen::Index>(e) * n, static_cast<Eigen::Index>(e) * Nb_, n, Nb_) = edge_modes_[e];
    }
    return R;
}

MortarBasis build_mortar_basis(const GridGeometry& geom, const std::vector<Eigen::MatrixXd>& edge_candidates,
                               int Nb) {
    if (Nb < 1) throw std::invalid_argument("a mortar basis has at least the constant mode");
    if (static_cast<int>(edge_candidates.size()) != geom.num_coarse_edges()) {
        throw std::invalid_argument("candidate list count does not match the coarse edge count");
    }
    const int n = geom.n;
    const double h = geom.h;
    std::vector<Eigen::MatrixXd> modes(edge_candidates.size());
    std::vector<std::vector<int>> dropped(edge_candidates.size());
    for (int e = 0; e < geom.num_coarse_edges(); ++e) {
        const Eigen::MatrixXd& cand = edge_candidates[e];
        if (cand.cols() > 0 && cand.rows() != n) {
            throw std::invalid_argument("edge " + std::to_string(e) + ": candidate vectors have wrong length");
        }
        Eigen::MatrixXd m(n, Nb);
        m.col(0).setConstant(1.0 / std::sqrt(n * h));
        int count = 1;
        for (Eigen::Index j = 0; j < cand.cols() && count < Nb; ++j) {
            Eigen::VectorXd v = cand.col(j);
            for (int pass = 0; pass < 2; ++pass) {
                for (int k = 0; k < count; ++k) v -= edge_dot(h, m.col(k), v) * m.col(k);
            }
            const double norm = std::sqrt(edge_dot(h, v, v));
            if (norm < 1e-10) {
                dropped[e].push_back(static_cast<int>(j));
                continue;
            }
            m.col(count++) = v / norm;
        }
        if (count < Nb) {
            throw std::runtime_error("edge " + std::to_string(e) + ": " + std::to_string(Nb) +
                                     " modes requested, only " + std::to_string(count) +
                                     " independent modes available");
        }
        modes[e] = std::move(m);
    }
    return MortarBasis(geom, Nb, std::move(modes), std::move(dropped));
}

Eigen::MatrixXd polynomial_basis_modes(int n, double h, int Nb) {
    if (n < 1 || h <= 0.0) throw std::invalid_argument("edge needs positive fine-edge count and length");
    if (Nb < 1 || Nb > n) {
        throw std::invalid_argument("polynomial mode count must lie in [1, " + std::to_string(n) + "]");
    }
    // Average of the degree-k Legendre polynomial over [a, b] in the [-1, 1]
    // edge coordinate, via the antiderivative (P_{k+1} - P_{k-1}) / (2k+1).
    const auto legendre = [](int k, double t) {
        double pkm1 = 1.0, pk = t;
        if (k == 0) return 1.0;
        for (int i = 1; i < k; ++i) {
            const double pkp1 = ((2 * i + 1) * t * pk - i * pkm1) / (i + 1);
            pkm1 = pk;
            pk = pkp1;
        }
        return pk;
    };
    Eigen::MatrixXd raw(n, Nb);
    for (int j = 0; j < n; ++j) {
        const double a = -1.0 + 2.0 * j / n;
        const double b = -1.0 + 2.0 * (j + 1) / n;
        raw(j, 0) = 1.0;
        for (int k = 1; k < Nb; ++k) {
            const double upper = legendre(k + 1, b) - legendre(k - 1, b);
            const double lower = legendre(k + 1, a) - legendre(k - 1, a);
            raw(j, k) = (upper - lower) / ((2 * k + 1) * (b - a));
        }
    }
    Eigen::MatrixXd out(n, Nb);
    for (int k = 0; k < Nb; ++k) {
        Eigen::VectorXd v = raw.col(k);
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i < k; ++i) v -= edge_dot(h, out.col(i), v) * out.col(i);
        }
        const double norm = std::sqrt(edge_dot(h, v, v));
        if (norm < 1e-10) throw std::runtime_error("polynomial modes degenerate on this edge partition");
        out.col(k) = v / norm;
    }
    return out;
}

MortarBasis build_basis_for_type(const GridGeometry& geom, const PermeabilityField& kappa, MortarBasisType type,
                                 int Nb, std::uint64_t seed, int threads) {
    const int ne = geom.num_coarse_edges();
    std::vector<Eigen::MatrixXd> candidates(static_cast<std::size_t>(ne));
    if (type == MortarBasisType::polynomial) {
        const Eigen::MatrixXd poly = polynomial_basis_modes(geom.n, geom.h, Nb);
        // The constant column duplicates the always-present first mode.
        const Eigen::MatrixXd enrich = poly.rightCols(Nb - 1);
        for (auto& c : candidates) c = enrich;
    } else {
        parallel_for(static_cast<std::size_t>(ne), threads, [&](std::size_t e) {
            const SnapshotSet snap = snapshot_space(geom, kappa, static_cast<int>(e), type, seed);
            const int rank = pod_rank(snap, geom.h);
            candidates[e] = pod_reduce(snap, geom.h, rank).modes;
        });
    }
    return build_mortar_basis(geom, candidates, Nb);
}

}  // namespace mortarms
