#include "sdot/density.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "sdot/errors.hpp"

namespace sdot {

double GridDensity::total_mass() const {
    long double acc = 0.0L;
    for (double v : values) acc += static_cast<long double>(v);
    return static_cast<double>(acc * static_cast<long double>(cell_volume));
}

void GridDensity::normalize() {
    const double m = total_mass();
    if (!(m > 0.0) || !std::isfinite(m))
        throw DegenerateMeasureError("density has zero or non-finite total mass");
    if (std::abs(m - 1.0) <= 1e-12) return;  // already normalized; idempotent
    const double inv = 1.0 / m;
    for (auto& v : values) v *= inv;
}

long GridDensity::cell_index_of(const Point& p) const {
    const double fx = (p[0] - origin[0]) / spacing[0];
    if (fx < 0.0 || fx >= static_cast<double>(shape[0])) return -1;
    long ix = static_cast<long>(fx);
    if (ix >= shape[0]) ix = shape[0] - 1;
    if (dim == 1) return ix;
    const double fy = (p[1] - origin[1]) / spacing[1];
    if (fy < 0.0 || fy >= static_cast<double>(shape[1])) return -1;
    long iy = static_cast<long>(fy);
    if (iy >= shape[1]) iy = shape[1] - 1;
    return ix + static_cast<long>(shape[0]) * iy;
}

double GridDensity::diameter() const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double e = shape[a] * spacing[a];
        s += e * e;
    }
    return std::sqrt(s);
}

RegionStats region_stats(const GridDensity& d,
                         const std::function<bool(std::size_t)>& mask) {
    long double mass = 0.0L;
    long double bx = 0.0L, by = 0.0L;
    const std::size_t n = d.cell_count();
    for (std::size_t k = 0; k < n; ++k) {
        if (!mask(k)) continue;
        const long double m = static_cast<long double>(d.cell_mass(k));
        if (m == 0.0L) continue;
        const Point c = d.cell_center(k);
        mass += m;
        bx += m * c[0];
        by += m * c[1];
    }
    RegionStats s;
    s.mass = static_cast<double>(mass);
    if (mass > 0.0L) {
        s.barycenter = {static_cast<double>(bx / mass),
                        static_cast<double>(by / mass)};
        s.has_barycenter = true;
    }
    return s;
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            // skip
        } else {
            break;
        }
        ch = in.get();
    }
    while (ch != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    if (tok.empty()) throw ParseError("unexpected end of PGM header");
    return tok;
}

long parse_pgm_int(std::istream& in, const char* what) {
    const std::string tok = next_pgm_token(in);
    try {
        std::size_t pos = 0;
        const long v = std::stol(tok, &pos);
        if (pos != tok.size()) throw ParseError("");
        return v;
    } catch (...) {
        throw ParseError(std::string("invalid PGM ") + what + ": '" + tok + "'");
    }
}

}  // namespace

GridDensity load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open PGM file: " + path);

    std::string magic = next_pgm_token(in);
    if (magic != "P2" && magic != "P5")
        throw ParseError("unsupported PGM magic '" + magic + "' in " + path);
    const bool binary = (magic == "P5");

    const long width = parse_pgm_int(in, "width");
    const long height = parse_pgm_int(in, "height");
    const long maxval = parse_pgm_int(in, "maxval");
    if (width < 1 || height < 1)
        throw ParseError("PGM dimensions must be positive");
    if (maxval < 1 || maxval > 65535)
        throw ParseError("PGM maxval out of range [1, 65535]");

    const std::size_t npix = static_cast<std::size_t>(width) * height;
    std::vector<double> vals(npix, 0.0);

    if (binary) {
        // single whitespace byte after maxval, then raster, big-endian if 16-bit
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> buf(npix * bytes);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size())
            throw ParseError("truncated PGM raster in " + path);
        for (std::size_t i = 0; i < npix; ++i) {
            unsigned v = buf[i * bytes];
            if (bytes == 2) v = (v << 8) | buf[i * bytes + 1];
            if (v > static_cast<unsigned>(maxval))
                throw ParseError("PGM sample exceeds maxval");
            vals[i] = static_cast<double>(v);
        }
    } else {
        for (std::size_t i = 0; i < npix; ++i) {
            const long v = parse_pgm_int(in, "sample");
            if (v < 0 || v > maxval) throw ParseError("PGM sample out of range");
            vals[i] = static_cast<double>(v);
        }
    }

    GridDensity d;
    d.dim = 2;
    d.origin = {0.0, 0.0};
    d.spacing = {1.0, 1.0};
    d.shape = {static_cast<int>(width), static_cast<int>(height)};
    d.cell_volume = 1.0;
    // pixel row r, column c -> cell (ix = c, iy = r)
    d.values = std::move(vals);
    if (!(d.total_mass() > 0.0))
        throw DegenerateMeasureError("all-zero image cannot be normalized: " + path);
    d.normalize();
    return d;
}

GridDensity build_uniform_box(const std::vector<double>& lo,
                              const std::vector<double>& hi,
                              const std::vector<int>& resolution) {
    const int dim = static_cast<int>(lo.size());
    if (dim < 1 || dim > 2 || hi.size() != lo.size() ||
        resolution.size() != lo.size())
        throw ArgumentError("build_uniform_box: dimension must be 1 or 2 with "
                            "matching lo/hi/resolution sizes");
    for (int a = 0; a < dim; ++a) {
        if (!(hi[a] > lo[a]))
            throw ArgumentError("build_uniform_box: box extent must be positive");
        if (resolution[a] < 1)
            throw ArgumentError("build_uniform_box: resolution must be >= 1");
    }

    GridDensity d;
    d.dim = dim;
    d.origin = {lo[0], dim > 1 ? lo[1] : 0.0};
    d.shape = {resolution[0], dim > 1 ? resolution[1] : 1};
    d.spacing = {(hi[0] - lo[0]) / resolution[0],
                 dim > 1 ? (hi[1] - lo[1]) / resolution[1] : 1.0};
    d.cell_volume = d.spacing[0] * (dim > 1 ? d.spacing[1] : 1.0);

    double volume = 1.0;
    for (int a = 0; a < dim; ++a) volume *= hi[a] - lo[a];
    d.values.assign(static_cast<std::size_t>(d.shape[0]) * d.shape[1],
                    1.0 / volume);
    d.normalize();
    return d;
}

GridDensity build_disk_mixture(const Point& center, double radius,
                               const std::vector<MixtureComponent>& components,
                               const std::array<int, 2>& resolution) {
    if (!(radius > 0.0)) throw ArgumentError("disk radius must be positive");
    if (components.empty()) throw ArgumentError("mixture needs a component");
    if (resolution[0] < 1 || resolution[1] < 1)
        throw ArgumentError("resolution must be >= 1 per axis");

    struct Prepared {
        double inv_xx, inv_xy, inv_yy, norm, weight;
        Point mean;
    };
    std::vector<Prepared> prep;
    prep.reserve(components.size());
    for (const auto& c : components) {
        const double det = c.cov[0] * c.cov[2] - c.cov[1] * c.cov[1];
        if (!(c.cov[0] > 0.0) || !(det > 0.0))
            throw ArgumentError("mixture covariance must be symmetric positive definite");
        if (!(c.weight > 0.0)) throw ArgumentError("mixture weight must be positive");
        Prepared p;
        p.inv_xx = c.cov[2] / det;
        p.inv_yy = c.cov[0] / det;
        p.inv_xy = -c.cov[1] / det;
        p.norm = 1.0 / (2.0 * 3.14159265358979323846 * std::sqrt(det));
        p.weight = c.weight;
        p.mean = c.mean;
        prep.push_back(p);
    }

    GridDensity d;
    d.dim = 2;
    d.origin = {center[0] - radius, center[1] - radius};
    d.shape = resolution;
    d.spacing = {2.0 * radius / resolution[0], 2.0 * radius / resolution[1]};
    d.cell_volume = d.spacing[0] * d.spacing[1];
    d.values.assign(static_cast<std::size_t>(resolution[0]) * resolution[1], 0.0);

    const double r2 = radius * radius;
    for (std::size_t k = 0; k < d.values.size(); ++k) {
        const Point x = d.cell_center(k);
        const double dx = x[0] - center[0];
        const double dy = x[1] - center[1];
        if (dx * dx + dy * dy > r2) continue;  // truncated to the disk
        double f = 0.0;
        for (const auto& p : prep) {
            const double ux = x[0] - p.mean[0];
            const double uy = x[1] - p.mean[1];
            const double q = p.inv_xx * ux * ux + 2.0 * p.inv_xy * ux * uy +
                             p.inv_yy * uy * uy;
            f += p.weight * p.norm * std::exp(-0.5 * q);
        }
        d.values[k] = f;
    }

    if (!(d.total_mass() > 1e-300))
        throw DegenerateMeasureError("mixture mass vanishes on the disk");
    d.normalize();
    return d;
}

}  // namespace sdot
