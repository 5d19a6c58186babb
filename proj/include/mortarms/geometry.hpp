#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace mortarms {

// Two-level Cartesian partition of the unit square: N x N coarse blocks,
// each subdivided into n x n square fine cells (Nf = N*n per side).
//
// Index conventions, used everywhere downstream:
//  - cells: row-major from the bottom-left, c = iy*Nf + ix
//  - fine edges: all horizontal edges first (bottom edge of cell column ix at
//    height iy, e = iy*Nf + ix for iy in [0,Nf]), then all vertical edges
//    (left edge of cell row iy at abscissa ix, e = Nf*(Nf+1) + iy*(Nf+1) + ix)
//  - coarse blocks: row-major, b = by*N + bx
//  - interior coarse edges: horizontal ones first (row-major over the
//    separating line j = 1..N-1 and the block column), then vertical ones
//    (row-major over the block row and the separating line i = 1..N-1)
//  - fine-mortar DOFs: dof = coarse_edge*n + offset, offset increasing with
//    the tangential coordinate along the edge

enum class EdgeOrientation { horizontal, vertical };

// Rectangular extension of an edge neighborhood, in fine-cell counts.
// For a vertical edge, d11 is the extent on each side of the edge line
// (normal direction) and d12 the padding past each edge end (tangential).
// For a horizontal edge, d22 and d21 play those two roles.  (d11,0;0,d22)
// with d11 = d22 = n reproduces the two-block neighborhood exactly.
struct OversampleSpec {
    int d11 = 0;
    int d12 = 0;
    int d21 = 0;
    int d22 = 0;

    // Presets 1..4: (n,0;0,n), (n,1;1,n), (floor(n/2),1;1,floor(n/2)), (2,1;1,2).
    static OversampleSpec domain(int which, int n);

    bool contains(const OversampleSpec& other) const {
        return d11 >= other.d11 && d12 >= other.d12 && d21 >= other.d21 && d22 >= other.d22;
    }
};

struct CoarseEdge {
    EdgeOrientation orient;
    int block_minus = -1;         // below (horizontal) or left (vertical)
    int block_plus = -1;          // above (horizontal) or right (vertical)
    int line = 0;                 // fine-grid line index the edge lies on (row or column boundary)
    int start = 0;                // first tangential fine index covered by the edge
    std::vector<int> fine_edges;  // n global fine-edge ids, tangentially ordered
};

struct GridGeometry {
    int N = 0;
    int n = 0;
    int Nf = 0;
    double H = 0.0;
    double h = 0.0;

    std::vector<CoarseEdge> coarse_edges;
    std::vector<int> skeleton_dof_of_edge;  // fine edge id -> mortar dof, -1 off the interior skeleton
    std::vector<int> edge_of_skeleton_dof;  // mortar dof -> fine edge id

    int num_cells() const { return Nf * Nf; }
    int num_fine_edges() const { return 2 * Nf * (Nf + 1); }
    int num_interior_fine_edges() const { return 2 * Nf * (Nf - 1); }
    int num_coarse_edges() const { return static_cast<int>(coarse_edges.size()); }
    int num_skeleton_dofs() const { return static_cast<int>(edge_of_skeleton_dof.size()); }
    int num_blocks() const { return N * N; }

    // Velocity and pressure unknowns of the fine mixed system plus one
    // multiplier per interior fine edge.
    std::int64_t fine_dof_count() const {
        std::int64_t nf = Nf;
        return 5 * nf * nf + 2 * nf * (nf - 1);
    }
    // Mortar unknowns when every interior coarse edge carries Nb modes.
    std::int64_t multiscale_dof_count(int Nb) const {
        return static_cast<std::int64_t>(Nb) * num_coarse_edges();
    }

    int cell_index(int ix, int iy) const { return iy * Nf + ix; }
    void cell_coords(int c, int& ix, int& iy) const {
        ix = c % Nf;
        iy = c / Nf;
    }
    bool cell_in_grid(int ix, int iy) const { return ix >= 0 && ix < Nf && iy >= 0 && iy < Nf; }

    int hedge_index(int ix, int iy) const { return iy * Nf + ix; }
    int vedge_index(int ix, int iy) const { return Nf * (Nf + 1) + iy * (Nf + 1) + ix; }
    bool edge_is_horizontal(int e) const { return e < Nf * (Nf + 1); }
    // For horizontal edges iy is the grid line in [0,Nf]; for vertical ones ix is.
    void edge_coords(int e, int& ix, int& iy) const {
        if (edge_is_horizontal(e)) {
            iy = e / Nf;
            ix = e % Nf;
        } else {
            int r = e - Nf * (Nf + 1);
            iy = r / (Nf + 1);
            ix = r % (Nf + 1);
        }
    }
    bool edge_is_boundary(int e) const {
        int ix, iy;
        edge_coords(e, ix, iy);
        return edge_is_horizontal(e) ? (iy == 0 || iy == Nf) : (ix == 0 || ix == Nf);
    }
    // Cells on either side of an edge: (below, above) for horizontal,
    // (left, right) for vertical; -1 outside the grid.
    std::pair<int, int> edge_cells(int e) const {
        int ix, iy;
        edge_coords(e, ix, iy);
        if (edge_is_horizontal(e)) {
            int below = iy > 0 ? cell_index(ix, iy - 1) : -1;
            int above = iy < Nf ? cell_index(ix, iy) : -1;
            return {below, above};
        }
        int left = ix > 0 ? cell_index(ix - 1, iy) : -1;
        int right = ix < Nf ? cell_index(ix, iy) : -1;
        return {left, right};
    }
    // Local edge order of a cell is L,R,B,T throughout the project.
    std::array<int, 4> cell_edges(int c) const {
        int ix, iy;
        cell_coords(c, ix, iy);
        return {vedge_index(ix, iy), vedge_index(ix + 1, iy), hedge_index(ix, iy), hedge_index(ix, iy + 1)};
    }

    int block_index(int bx, int by) const { return by * N + bx; }
    void block_coords(int b, int& bx, int& by) const {
        bx = b % N;
        by = b / N;
    }
    std::vector<int> block_cells(int b) const;

    double edge_length() const { return h; }
    double cell_center_x(int c) const { return ((c % Nf) + 0.5) * h; }
    double cell_center_y(int c) const { return ((c / Nf) + 0.5) * h; }
};

// Throws std::invalid_argument unless N >= 2 and n >= 2.
GridGeometry build_geometry(int N, int n);

// Fine cells of the rectangle spanned by `spec` around a coarse edge,
// clipped to the grid, ascending cell ids.  The normal extent is clamped to
// at least one cell per side so the result always contains the cells
// touching the edge.
std::vector<int> oversample_region(const GridGeometry& geom, int coarse_edge, const OversampleSpec& spec);

// Fine-mortar DOFs whose edge has a region cell on both of its sides,
// ascending.  With the plain two-block neighborhood this is exactly the
// owning edge's n DOFs.
std::vector<int> edge_skeleton_dofs(const GridGeometry& geom, const std::vector<int>& region_cells);

}  // namespace mortarms
