#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace sdot {

using Point = std::array<double, 2>;  // unused trailing coordinates are 0 in 1-D

/// Target measure discretized on a regular grid: piecewise-constant density
/// collocated at cell centers. Immutable after construction; every integral
/// in the library is a weighted sum over the cells of one of these.
struct GridDensity {
    int dim = 0;                       // 1 or 2
    Point origin{0.0, 0.0};            // world coordinates of the grid corner
    Point spacing{1.0, 1.0};           // cell edge lengths, strictly positive
    std::array<int, 2> shape{1, 1};    // cells per axis (shape[1] == 1 in 1-D)
    std::vector<double> values;        // density at cell centers, >= 0
    double cell_volume = 1.0;          // product of spacings over dim axes

    std::size_t cell_count() const { return values.size(); }

    // x varies fastest: k = ix + shape[0] * iy.
    Point cell_center(std::size_t k) const {
        const int ix = static_cast<int>(k) % shape[0];
        const int iy = static_cast<int>(k) / shape[0];
        Point c{origin[0] + (ix + 0.5) * spacing[0], 0.0};
        if (dim > 1) c[1] = origin[1] + (iy + 0.5) * spacing[1];
        return c;
    }

    double cell_mass(std::size_t k) const { return values[k] * cell_volume; }

    double total_mass() const;

    // Rescales values so the total mass is 1. Idempotent. Throws
    // DegenerateMeasureError when the mass vanishes.
    void normalize();

    // Index of the cell containing p, or -1 when p is outside the grid window.
    long cell_index_of(const Point& p) const;

    // A point is in the support when its cell exists and has positive density.
    bool in_support(const Point& p) const {
        const long k = cell_index_of(p);
        return k >= 0 && values[static_cast<std::size_t>(k)] > 0.0;
    }

    Point box_lo() const { return origin; }
    Point box_hi() const {
        Point h{origin[0] + shape[0] * spacing[0], 0.0};
        if (dim > 1) h[1] = origin[1] + shape[1] * spacing[1];
        return h;
    }

    // Diameter of the grid window (upper bound for diam supp).
    double diameter() const;
};

struct RegionStats {
    double mass = 0.0;
    Point barycenter{0.0, 0.0};
    bool has_barycenter = false;  // false iff the region carries zero mass
};

/// Mass and mass-weighted mean of the cells selected by `mask`.
/// Accumulates in ascending cell index with extended-precision accumulators.
RegionStats region_stats(const GridDensity& d,
                         const std::function<bool(std::size_t)>& mask);

/// Reads a P2 (ASCII) or P5 (binary) PGM, maxval <= 65535, comments allowed.
/// Pixel (row r, col c) becomes the unit cell centered at (c + 0.5, r + 0.5).
GridDensity load_pgm(const std::string& path);

/// Uniform normalized density on an axis-aligned box.
GridDensity build_uniform_box(const std::vector<double>& lo,
                              const std::vector<double>& hi,
                              const std::vector<int>& resolution);

struct MixtureComponent {
    Point mean{0.0, 0.0};
    std::array<double, 3> cov{1.0, 0.0, 1.0};  // (xx, xy, yy), must be SPD
    double weight = 1.0;
};

/// 2-D Gaussian mixture evaluated at cell centers, zeroed outside the disk of
/// the given center/radius, renormalized. The grid window is the disk's
/// bounding box.
GridDensity build_disk_mixture(const Point& center, double radius,
                               const std::vector<MixtureComponent>& components,
                               const std::array<int, 2>& resolution);

}  // namespace sdot
