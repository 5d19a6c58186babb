#include "mortarms/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mortarms {

namespace {

bool rect_contains(const RectFeature& r, double x, double y) {
    return x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1;
}

double dist_to_segment(double x, double y, const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double dx = b[0] - a[0], dy = b[1] - a[1];
    double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((x - a[0]) * dx + (y - a[1]) * dy) / len2, 0.0, 1.0);
    double px = a[0] + t * dx - x, py = a[1] + t * dy - y;
    return std::sqrt(px * px + py * py);
}

bool channel_contains(const ChannelFeature& c, double x, double y) {
    if (c.points.size() < 2) return false;
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i)
        if (dist_to_segment(x, y, c.points[i], c.points[i + 1]) <= 0.5 * c.width) return true;
    return false;
}

}  // namespace

FieldSpec FieldSpec::builtin(const std::string& name, double contrast) {
    FieldSpec spec;
    spec.background = 1.0;
    auto rect = [&](double x0, double y0, double x1, double y1) {
        spec.features.push_back(RectFeature{x0, y0, x1, y1, contrast});
    };
    auto square = [&](double cx, double cy) { rect(cx - 0.025, cy - 0.025, cx + 0.025, cy + 0.025); };
    if (name == "inclusions") {
        // Isolated square blobs.  Most straddle exactly one block-boundary
        // segment of the 1/5 or 1/10 coarse grids, crossing it transversally
        // at its middle; no blob lies along a boundary line or covers a
        // corner, and no boundary segment meets more than one blob.  A few
        // blobs sit strictly inside blocks.
        square(0.20, 0.13);
        square(0.40, 0.33);
        square(0.60, 0.53);
        square(0.80, 0.73);
        square(0.10, 0.67);
        square(0.30, 0.87);
        square(0.50, 0.27);
        square(0.70, 0.47);
        square(0.90, 0.07);
        square(0.13, 0.40);
        square(0.33, 0.80);
        square(0.53, 0.20);
        square(0.73, 0.60);
        square(0.27, 0.10);
        square(0.47, 0.90);
        square(0.67, 0.30);
        square(0.87, 0.50);
        square(0.05, 0.70);
        square(0.15, 0.25);
        square(0.55, 0.75);
        square(0.85, 0.15);
    } else if (name == "channels") {
        // Thin horizontal channels running across the whole domain, so the
        // flow they carry enters and leaves through the outer boundary
        // rather than spilling into the background at interior tips (tip
        // leakage keeps weakening as the contrast grows, which would make
        // the errors contrast-sensitive).  Each channel crosses every
        // vertical block-boundary line transversally and is offset so it
        // never runs along or straddles a horizontal boundary line of the
        // 1/5 or 1/10 coarse grids, and the channels stay disjoint: a
        // junction would couple the traces on nearby block boundaries and
        // destabilise the reduced spaces under contrast changes.
        rect(0.0, 0.105, 1.0, 0.155);
        rect(0.0, 0.445, 1.0, 0.495);
        rect(0.0, 0.745, 1.0, 0.795);
    } else {
        throw std::invalid_argument("unknown builtin field '" + name + "' (expected 'inclusions' or 'channels')");
    }
    return spec;
}

PermeabilityField realize_field(const FieldSpec& spec, const GridGeometry& geom) {
    PermeabilityField field;
    if (!spec.raster.empty()) {
        field.values = read_raster(spec.raster, geom);
        return field;
    }
    if (!(spec.background > 0.0)) throw std::invalid_argument("field background must be positive");
    for (const Feature& f : spec.features) {
        double eta = std::holds_alternative<RectFeature>(f) ? std::get<RectFeature>(f).eta : std::get<ChannelFeature>(f).eta;
        if (!(eta > 0.0)) throw std::invalid_argument("feature contrast multiplier must be positive");
    }
    field.values.setConstant(geom.num_cells(), spec.background);
    for (int c = 0; c < geom.num_cells(); ++c) {
        double x = geom.cell_center_x(c), y = geom.cell_center_y(c);
        for (const Feature& f : spec.features) {
            if (std::holds_alternative<RectFeature>(f)) {
                const auto& r = std::get<RectFeature>(f);
                if (rect_contains(r, x, y)) field.values[c] = r.eta * spec.background;
            } else {
                const auto& ch = std::get<ChannelFeature>(f);
                if (channel_contains(ch, x, y)) field.values[c] = ch.eta * spec.background;
            }
        }
    }
    return field;
}

SourceField realize_source_constant(double value, const GridGeometry& geom) {
    SourceField s;
    s.values.setConstant(geom.num_cells(), value);
    return s;
}

SourceField realize_source_cells(const Eigen::VectorXd& per_cell, const GridGeometry& geom) {
    if (per_cell.size() != geom.num_cells())
        throw std::invalid_argument("source array has " + std::to_string(per_cell.size()) + " entries, grid has " +
                                    std::to_string(geom.num_cells()) + " cells");
    if (!per_cell.allFinite()) throw std::invalid_argument("source values must be finite");
    return SourceField{per_cell};
}

Eigen::VectorXd read_raster(const std::string& path, const GridGeometry& geom) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open raster file '" + path + "'");
    int rows = 0, cols = 0;
    if (!(in >> rows >> cols)) throw std::runtime_error("raster file '" + path + "' lacks the size header");
    if (rows != geom.Nf || cols != geom.Nf)
        throw std::runtime_error("raster shape mismatch: file is " + std::to_string(rows) + "x" + std::to_string(cols) +
                                 ", grid needs " + std::to_string(geom.Nf) + "x" + std::to_string(geom.Nf));
    Eigen::VectorXd values(geom.num_cells());
    for (int iy = 0; iy < geom.Nf; ++iy) {
        for (int ix = 0; ix < geom.Nf; ++ix) {
            double v;
            if (!(in >> v)) throw std::runtime_error("raster file '" + path + "' ended early");
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::runtime_error("raster value at row " + std::to_string(iy) + " col " + std::to_string(ix) +
                                         " is not positive");
            values[geom.cell_index(ix, iy)] = v;
        }
    }
    return values;
}

void write_raster(const std::string& path, const GridGeometry& geom, const Eigen::VectorXd& cell_values) {
    if (cell_values.size() != geom.num_cells()) throw std::invalid_argument("cell value array size mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << geom.Nf << " " << geom.Nf << "\n";
    std::ostringstream line;
    for (int iy = 0; iy < geom.Nf; ++iy) {
        line.str("");
        for (int ix = 0; ix < geom.Nf; ++ix) {
            if (ix) line << " ";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", cell_values[geom.cell_index(ix, iy)]);
            line << buf;
        }
        out << line.str() << "\n";
    }
}

}  // namespace mortarms
