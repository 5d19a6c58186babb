#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <variant>
#include <vector>

#include "mortarms/geometry.hpp"

namespace mortarms {

// Piecewise-constant coefficient and source data on the fine grid.
// Feature geometry is resolution independent: a cell takes a feature's value
// when its center lies inside the feature, and later features win where they
// overlap.

struct RectFeature {
    double x0, y0, x1, y1;  // axis-aligned, unit-square coordinates
    double eta;             // multiplier applied to the background
};

struct ChannelFeature {
    std::vector<std::array<double, 2>> points;  // polyline vertices
    double width;
    double eta;
};

using Feature = std::variant<RectFeature, ChannelFeature>;

struct FieldSpec {
    double background = 1.0;
    std::vector<Feature> features;
    std::string raster;  // optional path; when set it overrides background/features

    // Named synthetic coefficient layouts shipped with the experiments:
    //  "inclusions" - scattered blobs plus short channel segments that
    //                 straddle block boundaries
    //  "channels"   - long channels crossing many block boundaries
    // Every feature carries the given contrast multiplier.
    static FieldSpec builtin(const std::string& name, double contrast);
};

struct PermeabilityField {
    Eigen::VectorXd values;  // per cell, > 0
};

struct SourceField {
    Eigen::VectorXd values;  // per cell (cell-averaged density)
};

PermeabilityField realize_field(const FieldSpec& spec, const GridGeometry& geom);

SourceField realize_source_constant(double value, const GridGeometry& geom);
SourceField realize_source_cells(const Eigen::VectorXd& per_cell, const GridGeometry& geom);

// Raster format: a header line "Nf Nf" followed by Nf rows of Nf positive
// values, rows listed bottom to top (row-major from the bottom-left cell).
Eigen::VectorXd read_raster(const std::string& path, const GridGeometry& geom);
void write_raster(const std::string& path, const GridGeometry& geom, const Eigen::VectorXd& cell_values);

}  // namespace mortarms
