#include "sdot/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sdot/errors.hpp"

namespace sdot {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    return out;
}

}  // namespace

void write_trace_csv(const SolverTrace& trace, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "n,loss,gradNorm,stepNorm,minCellMass,descentLHS,descentRHS,"
           "innerIterations\n";
    for (const auto& r : trace.rows) {
        out << r.n << ',' << format_double(r.loss) << ','
            << format_double(r.grad_norm) << ',' << format_double(r.step_norm)
            << ',' << format_double(r.min_cell_mass) << ','
            << format_double(r.descent_lhs) << ',' << format_double(r.descent_rhs)
            << ',' << r.inner_iterations << '\n';
    }
    if (!out) throw Error("failed writing trace CSV: " + path);
}

void write_label_pgm(const GridDensity& d, const CellPartition& part,
                     const std::string& path) {
    std::ofstream out = open_out(path);
    const int w = d.shape[0];
    const int h = d.dim > 1 ? d.shape[1] : 1;
    int maxv = 1;
    for (std::size_t k = 0; k < part.labels.size(); ++k)
        maxv = std::max(maxv, part.labels[k] + 1);
    out << "P2\n" << w << ' ' << h << '\n' << maxv << '\n';
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const std::size_t k = static_cast<std::size_t>(col) +
                                  static_cast<std::size_t>(w) * row;
            const int v = d.values[k] > 0.0 ? part.labels[k] + 1 : 0;
            out << v << (col + 1 == w ? '\n' : ' ');
        }
    }
    if (!out) throw Error("failed writing label raster: " + path);
}

void write_region_csv(const CellPartition& part, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "region,mass,barycenterX,barycenterY,secondMoment\n";
    for (std::size_t i = 0; i < part.regions.size(); ++i) {
        const auto& r = part.regions[i];
        out << i << ',' << format_double(r.mass) << ','
            << format_double(r.barycenter[0]) << ','
            << format_double(r.barycenter[1]) << ','
            << format_double(r.second_moment) << '\n';
    }
    if (!out) throw Error("failed writing region CSV: " + path);
}

namespace {

// distinct fill colors, cycled over regions
const char* kPalette[] = {
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4",
    "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff",
    "#9a6324", "#fffac8", "#800000", "#aaffc3", "#808000", "#ffd8b1",
    "#000075", "#808080",
};
constexpr int kPaletteSize = 20;

}  // namespace

void render_svg(const GridDensity& d, const CellPartition& part,
                const PointConfiguration& y,
                const std::vector<double>& point_masses,
                const std::string& path) {
    const Point lo = d.box_lo();
    const Point hi = d.box_hi();
    const double world_w = hi[0] - lo[0];
    const double world_h = d.dim > 1 ? hi[1] - lo[1] : 0.15 * world_w;
    const double px = 720.0;
    const double scale = px / world_w;
    const double py = world_h * scale;

    auto sx = [&](double x) { return (x - lo[0]) * scale; };
    // world y grows downward on the raster, matching the PGM row convention
    auto sy = [&](double yv) { return d.dim > 1 ? (yv - lo[1]) * scale : 0.0; };

    std::ofstream out = open_out(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px
        << "\" height=\"" << py << "\" viewBox=\"0 0 " << px << ' ' << py
        << "\">\n";
    out << "<rect width=\"" << px << "\" height=\"" << py
        << "\" fill=\"#ffffff\"/>\n";

    const double cw = d.spacing[0] * scale;
    const double ch = d.dim > 1 ? d.spacing[1] * scale : py;
    for (std::size_t k = 0; k < part.labels.size(); ++k) {
        if (d.values[k] <= 0.0) continue;
        const int label = part.labels[k];
        if (label < 0) continue;
        const Point c = d.cell_center(k);
        const double x0 = sx(c[0] - 0.5 * d.spacing[0]);
        const double y0 = d.dim > 1 ? sy(c[1] - 0.5 * d.spacing[1]) : 0.0;
        out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << cw + 0.5
            << "\" height=\"" << ch + 0.5 << "\" fill=\""
            << kPalette[label % kPaletteSize] << "\" fill-opacity=\"0.55\"/>\n";
    }

    // dot diameter proportional to region mass
    double mass_max = 0.0;
    for (double m : point_masses) mass_max = std::max(mass_max, m);
    if (mass_max <= 0.0) mass_max = 1.0;
    for (int i = 0; i < y.size(); ++i) {
        const double m = i < static_cast<int>(point_masses.size())
                             ? point_masses[static_cast<std::size_t>(i)]
                             : mass_max;
        const double r = 12.0 * (m / mass_max);
        const double cx = sx(y.pts[static_cast<std::size_t>(i)][0]);
        const double cy = d.dim > 1 ? sy(y.pts[static_cast<std::size_t>(i)][1])
                                    : 0.5 * py;
        out << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << r
            << "\" fill=\"#1f4fd8\" stroke=\"#0a1e60\" stroke-width=\"1\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw Error("failed writing SVG: " + path);
}

}  // namespace sdot
