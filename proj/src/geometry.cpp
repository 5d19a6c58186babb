#include "mortarms/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mortarms {

OversampleSpec OversampleSpec::domain(int which, int n) {
    switch (which) {
        case 1: return {n, 0, 0, n};
        case 2: return {n, 1, 1, n};
        case 3: return {n / 2, 1, 1, n / 2};
        case 4: return {2, 1, 1, 2};
        default: throw std::invalid_argument("oversample domain preset must be 1..4, got " + std::to_string(which));
    }
}

std::vector<int> GridGeometry::block_cells(int b) const {
    int bx, by;
    block_coords(b, bx, by);
    std::vector<int> cells;
    cells.reserve(static_cast<std::size_t>(n) * n);
    for (int jy = 0; jy < n; ++jy)
        for (int jx = 0; jx < n; ++jx) cells.push_back(cell_index(bx * n + jx, by * n + jy));
    return cells;
}

GridGeometry build_geometry(int N, int n) {
    if (N < 2 || n < 2)
        throw std::invalid_argument("grid requires N >= 2 coarse blocks per side and n >= 2 cells per block, got N=" +
                                    std::to_string(N) + " n=" + std::to_string(n));
    GridGeometry g;
    g.N = N;
    g.n = n;
    g.Nf = N * n;
    g.H = 1.0 / N;
    g.h = 1.0 / g.Nf;

    // Horizontal interior coarse edges, row-major over (separating row j, block column).
    for (int j = 1; j < N; ++j) {
        for (int bx = 0; bx < N; ++bx) {
            CoarseEdge e;
            e.orient = EdgeOrientation::horizontal;
            e.block_minus = g.block_index(bx, j - 1);
            e.block_plus = g.block_index(bx, j);
            e.line = j * n;
            e.start = bx * n;
            e.fine_edges.reserve(n);
            for (int k = 0; k < n; ++k) e.fine_edges.push_back(g.hedge_index(e.start + k, e.line));
            g.coarse_edges.push_back(std::move(e));
        }
    }
    // Vertical interior coarse edges, row-major over (block row, separating column i).
    for (int by = 0; by < N; ++by) {
        for (int i = 1; i < N; ++i) {
            CoarseEdge e;
            e.orient = EdgeOrientation::vertical;
            e.block_minus = g.block_index(i - 1, by);
            e.block_plus = g.block_index(i, by);
            e.line = i * n;
            e.start = by * n;
            e.fine_edges.reserve(n);
            for (int k = 0; k < n; ++k) e.fine_edges.push_back(g.vedge_index(e.line, e.start + k));
            g.coarse_edges.push_back(std::move(e));
        }
    }

    g.skeleton_dof_of_edge.assign(g.num_fine_edges(), -1);
    g.edge_of_skeleton_dof.assign(static_cast<std::size_t>(g.num_coarse_edges()) * n, -1);
    for (int ce = 0; ce < g.num_coarse_edges(); ++ce) {
        for (int k = 0; k < n; ++k) {
            int fe = g.coarse_edges[ce].fine_edges[k];
            int dof = ce * n + k;
            g.skeleton_dof_of_edge[fe] = dof;
            g.edge_of_skeleton_dof[dof] = fe;
        }
    }
    return g;
}

std::vector<int> oversample_region(const GridGeometry& geom, int coarse_edge, const OversampleSpec& spec) {
    if (coarse_edge < 0 || coarse_edge >= geom.num_coarse_edges())
        throw std::invalid_argument("coarse edge index out of range");
    if (spec.d11 < 0 || spec.d12 < 0 || spec.d21 < 0 || spec.d22 < 0)
        throw std::invalid_argument("oversample extension counts must be nonnegative");
    const CoarseEdge& e = geom.coarse_edges[coarse_edge];

    int cx0, cx1, cy0, cy1;  // half-open cell ranges
    if (e.orient == EdgeOrientation::vertical) {
        int normal = std::max(spec.d11, 1);
        cx0 = e.line - normal;
        cx1 = e.line + normal;
        cy0 = e.start - spec.d12;
        cy1 = e.start + geom.n + spec.d12;
    } else {
        int normal = std::max(spec.d22, 1);
        cy0 = e.line - normal;
        cy1 = e.line + normal;
        cx0 = e.start - spec.d21;
        cx1 = e.start + geom.n + spec.d21;
    }
    cx0 = std::max(cx0, 0);
    cy0 = std::max(cy0, 0);
    cx1 = std::min(cx1, geom.Nf);
    cy1 = std::min(cy1, geom.Nf);

    std::vector<int> cells;
    cells.reserve(static_cast<std::size_t>(cx1 - cx0) * (cy1 - cy0));
    for (int iy = cy0; iy < cy1; ++iy)
        for (int ix = cx0; ix < cx1; ++ix) cells.push_back(geom.cell_index(ix, iy));
    return cells;
}

std::vector<int> edge_skeleton_dofs(const GridGeometry& geom, const std::vector<int>& region_cells) {
    std::vector<char> in_region(geom.num_cells(), 0);
    for (int c : region_cells) {
        if (c < 0 || c >= geom.num_cells()) throw std::invalid_argument("region cell index out of range");
        in_region[c] = 1;
    }
    std::vector<int> dofs;
    for (int dof = 0; dof < geom.num_skeleton_dofs(); ++dof) {
        auto [minus, plus] = geom.edge_cells(geom.edge_of_skeleton_dof[dof]);
        if (minus >= 0 && plus >= 0 && in_region[minus] && in_region[plus]) dofs.push_back(dof);
    }
    return dofs;
}

}  // namespace mortarms
