#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mortarms/geometry.hpp"

using namespace mortarms;

namespace {

std::vector<int> neighborhood_cells(const GridGeometry& geom, int edge) {
    const CoarseEdge& ce = geom.coarse_edges[static_cast<std::size_t>(edge)];
    std::vector<int> cells = geom.block_cells(ce.block_minus);
    const std::vector<int> plus = geom.block_cells(ce.block_plus);
    cells.insert(cells.end(), plus.begin(), plus.end());
    std::sort(cells.begin(), cells.end());
    return cells;
}

}  // namespace

TEST_CASE("grid counts match the closed-form identities") {
    const GridGeometry g = build_geometry(5, 20);
    CHECK(g.Nf == 100);
    CHECK(g.num_cells() == 10000);
    CHECK(g.fine_dof_count() == 5 * 100 * 100 + 2 * 100 * 99);
    CHECK(g.fine_dof_count() == 69800);
    CHECK(g.num_coarse_edges() == 2 * 5 * 4);
    CHECK(g.multiscale_dof_count(5) == 200);

    const GridGeometry s = build_geometry(2, 2);
    CHECK(s.num_coarse_edges() == 4);
    CHECK(s.num_cells() == 16);
    CHECK(s.num_skeleton_dofs() == 8);
}

TEST_CASE("geometry rejects degenerate partitions") {
    CHECK_THROWS_AS(build_geometry(1, 4), std::invalid_argument);
    CHECK_THROWS_AS(build_geometry(4, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_geometry(0, 0), std::invalid_argument);
}

TEST_CASE("counting identities hold across a parameter sweep") {
    for (const int N : {2, 3, 4, 5, 8}) {
        for (const int n : {2, 3, 16}) {
            const GridGeometry g = build_geometry(N, n);
            const int nf = N * n;
            CHECK(g.Nf == nf);
            CHECK(g.h == doctest::Approx(1.0 / nf));
            CHECK(g.H == doctest::Approx(1.0 / N));
            CHECK(g.num_fine_edges() == 2 * nf * (nf + 1));
            CHECK(g.num_interior_fine_edges() == 2 * nf * (nf - 1));
            CHECK(g.num_coarse_edges() == 2 * N * (N - 1));
            CHECK(g.num_skeleton_dofs() == g.num_coarse_edges() * n);

            std::set<int> seen;
            for (int e = 0; e < g.num_coarse_edges(); ++e) {
                const CoarseEdge& ce = g.coarse_edges[static_cast<std::size_t>(e)];
                CHECK(static_cast<int>(ce.fine_edges.size()) == n);
                CHECK(ce.block_minus != ce.block_plus);
                CHECK(ce.block_minus >= 0);
                CHECK(ce.block_plus < g.num_blocks());
                for (const int fe : ce.fine_edges) {
                    CHECK(!g.edge_is_boundary(fe));
                    CHECK(seen.insert(fe).second);  // skeleton edges are disjoint across coarse edges
                }
            }

            for (int d = 0; d < g.num_skeleton_dofs(); ++d) {
                const int e = g.edge_of_skeleton_dof[static_cast<std::size_t>(d)];
                CHECK(g.skeleton_dof_of_edge[static_cast<std::size_t>(e)] == d);
            }
        }
    }
}

TEST_CASE("skeleton DOF numbering is edge-major with tangential offsets") {
    const GridGeometry g = build_geometry(3, 4);
    for (int e = 0; e < g.num_coarse_edges(); ++e) {
        const CoarseEdge& ce = g.coarse_edges[static_cast<std::size_t>(e)];
        for (int t = 0; t < g.n; ++t) {
            CHECK(g.skeleton_dof_of_edge[static_cast<std::size_t>(ce.fine_edges[static_cast<std::size_t>(t)])] ==
                  e * g.n + t);
        }
    }
}

TEST_CASE("cell and edge incidence agree in both directions") {
    const GridGeometry g = build_geometry(3, 3);
    for (int c = 0; c < g.num_cells(); ++c) {
        const auto edges = g.cell_edges(c);
        const auto [left_l, left_r] = g.edge_cells(edges[0]);
        CHECK(left_r == c);
        (void)left_l;
        const auto [right_l, right_r] = g.edge_cells(edges[1]);
        CHECK(right_l == c);
        (void)right_r;
        const auto [bot_b, bot_a] = g.edge_cells(edges[2]);
        CHECK(bot_a == c);
        (void)bot_b;
        const auto [top_b, top_a] = g.edge_cells(edges[3]);
        CHECK(top_b == c);
        (void)top_a;
    }
    for (int e = 0; e < g.num_fine_edges(); ++e) {
        const auto [minus, plus] = g.edge_cells(e);
        CHECK(g.edge_is_boundary(e) == (minus < 0 || plus < 0));
    }
}

TEST_CASE("preset 1 reproduces the plain two-block neighborhood") {
    const GridGeometry g = build_geometry(3, 4);
    const OversampleSpec d1 = OversampleSpec::domain(1, g.n);
    for (int e = 0; e < g.num_coarse_edges(); ++e) {
        CHECK(oversample_region(g, e, d1) == neighborhood_cells(g, e));
    }
}

TEST_CASE("oversample presets are valid and distinct") {
    const OversampleSpec d1 = OversampleSpec::domain(1, 8);
    const OversampleSpec d2 = OversampleSpec::domain(2, 8);
    const OversampleSpec d3 = OversampleSpec::domain(3, 8);
    const OversampleSpec d4 = OversampleSpec::domain(4, 8);
    CHECK(d1.d11 == 8);
    CHECK(d1.d12 == 0);
    CHECK(d2.d12 == 1);
    CHECK(d3.d11 == 4);
    CHECK(d4.d11 == 2);
    CHECK(d2.contains(d1));
    CHECK(!d4.contains(d2));
    CHECK_THROWS_AS(OversampleSpec::domain(5, 8), std::invalid_argument);
    CHECK_THROWS_AS(OversampleSpec::domain(0, 8), std::invalid_argument);
}

TEST_CASE("larger oversample specs produce supersets") {
    const GridGeometry g = build_geometry(3, 4);
    const std::vector<OversampleSpec> smaller = {
        OversampleSpec::domain(4, g.n), OversampleSpec::domain(3, g.n), OversampleSpec{1, 0, 0, 1}};
    const std::vector<OversampleSpec> larger = {
        OversampleSpec::domain(2, g.n), OversampleSpec{g.n, 2, 2, g.n}, OversampleSpec{2, 1, 1, 2}};
    for (int e = 0; e < g.num_coarse_edges(); ++e) {
        for (const auto& lo : smaller) {
            for (const auto& hi : larger) {
                if (!hi.contains(lo)) continue;
                const std::vector<int> a = oversample_region(g, e, lo);
                const std::vector<int> b = oversample_region(g, e, hi);
                CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
            }
        }
    }
}

TEST_CASE("oversample regions always cover the edge-adjacent cells and stay in the grid") {
    const GridGeometry g = build_geometry(4, 3);
    for (int e = 0; e < g.num_coarse_edges(); ++e) {
        for (int which = 1; which <= 4; ++which) {
            const std::vector<int> region = oversample_region(g, e, OversampleSpec::domain(which, g.n));
            CHECK(std::is_sorted(region.begin(), region.end()));
            CHECK(region.front() >= 0);
            CHECK(region.back() < g.num_cells());
            for (const int fe : g.coarse_edges[static_cast<std::size_t>(e)].fine_edges) {
                const auto [minus, plus] = g.edge_cells(fe);
                CHECK(std::binary_search(region.begin(), region.end(), minus));
                CHECK(std::binary_search(region.begin(), region.end(), plus));
            }
        }
    }
}

TEST_CASE("interior preset-2 region is the neighborhood with one tangential pad row per end") {
    const GridGeometry g = build_geometry(5, 20);
    // Vertical edge between block columns 2 and 3 at block row 2: far from
    // the domain boundary, so no clipping applies.
    int edge = -1;
    for (int e = 0; e < g.num_coarse_edges(); ++e) {
        const CoarseEdge& ce = g.coarse_edges[static_cast<std::size_t>(e)];
        if (ce.orient == EdgeOrientation::vertical && ce.line == 60 && ce.start == 40) edge = e;
    }
    REQUIRE(edge >= 0);
    const std::vector<int> region = oversample_region(g, edge, OversampleSpec::domain(2, g.n));
    CHECK(region.size() == 40u * 22u);
    std::vector<int> expect;
    for (int iy = 39; iy < 61; ++iy) {
        for (int ix = 40; ix < 80; ++ix) expect.push_back(g.cell_index(ix, iy));
    }
    std::sort(expect.begin(), expect.end());
    CHECK(region == expect);
}

TEST_CASE("boundary-adjacent regions are clipped to the grid") {
    const GridGeometry g = build_geometry(3, 4);
    // Horizontal edge in the leftmost block column: the tangential pad pokes
    // past the left domain boundary and must be cut off.
    int edge = -1;
    for (int e = 0; e < g.num_coarse_edges(); ++e) {
        const CoarseEdge& ce = g.coarse_edges[static_cast<std::size_t>(e)];
        if (ce.orient == EdgeOrientation::horizontal && ce.start == 0 && ce.line == g.n) edge = e;
    }
    REQUIRE(edge >= 0);
    const std::vector<int> region = oversample_region(g, edge, OversampleSpec::domain(2, g.n));
    // Unclipped would be (n+2) wide; clipping removes the column at ix=-1.
    CHECK(region.size() == static_cast<std::size_t>((g.n + 1) * 2 * g.n));
}

TEST_CASE("skeleton DOFs of a region require region cells on both sides") {
    const GridGeometry g = build_geometry(3, 3);
    SUBCASE("two-block neighborhood yields exactly the edge's own DOFs") {
        for (int e = 0; e < g.num_coarse_edges(); ++e) {
            const std::vector<int> dofs = edge_skeleton_dofs(g, neighborhood_cells(g, e));
            REQUIRE(static_cast<int>(dofs.size()) == g.n);
            for (int t = 0; t < g.n; ++t) CHECK(dofs[static_cast<std::size_t>(t)] == e * g.n + t);
        }
    }
    SUBCASE("the whole grid yields every DOF") {
        std::vector<int> all(static_cast<std::size_t>(g.num_cells()));
        for (int c = 0; c < g.num_cells(); ++c) all[static_cast<std::size_t>(c)] = c;
        const std::vector<int> dofs = edge_skeleton_dofs(g, all);
        CHECK(static_cast<int>(dofs.size()) == g.num_skeleton_dofs());
    }
}

TEST_CASE("preset-2 gather set picks up collinear and crossing skeleton segments") {
    const GridGeometry g = build_geometry(5, 20);
    int edge = -1;
    for (int e = 0; e < g.num_coarse_edges(); ++e) {
        const CoarseEdge& ce = g.coarse_edges[static_cast<std::size_t>(e)];
        if (ce.orient == EdgeOrientation::vertical && ce.line == 60 && ce.start == 40) edge = e;
    }
    REQUIRE(edge >= 0);
    const std::vector<int> region = oversample_region(g, edge, OversampleSpec::domain(2, g.n));
    const std::vector<int> dofs = edge_skeleton_dofs(g, region);
    // 20 own DOFs, 1 collinear DOF past each end, and the two crossing
    // horizontal skeleton lines spanning the region's full 40-cell width.
    CHECK(dofs.size() == 20u + 2u + 80u);

    std::vector<int> expect;
    for (int d = 0; d < g.num_skeleton_dofs(); ++d) {
        const auto [minus, plus] = g.edge_cells(g.edge_of_skeleton_dof[static_cast<std::size_t>(d)]);
        if (std::binary_search(region.begin(), region.end(), minus) &&
            std::binary_search(region.begin(), region.end(), plus)) {
            expect.push_back(d);
        }
    }
    CHECK(dofs == expect);
}
