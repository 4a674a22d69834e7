#pragma once

#include <vector>

#include "sdot/cost.hpp"
#include "sdot/density.hpp"
#include "sdot/points.hpp"

namespace sdot {

constexpr int kUnassigned = -1;

/// Throws ArgumentError when any coordinate is NaN or infinite.
void require_finite(const PointConfiguration& y, const char* who);

/// Per-grid-cell region labels plus per-region statistics. second_moment of
/// region i is the integral of ||x - y_i||^2 over the region.
struct CellPartition {
    struct Region {
        double mass = 0.0;
        Point barycenter{0.0, 0.0};
        double second_moment = 0.0;
        bool has_barycenter = false;
    };

    std::vector<int> labels;  // one entry per grid cell
    std::vector<Region> regions;

    double min_mass() const;
};

/// Nearest-point assignment of every cell center; ties go to the lowest
/// index. Throws DiagonalError on coincident points unless merge_duplicates,
/// in which case duplicates are first merged via tie_weights and labels refer
/// to group representatives.
CellPartition voronoi_partition(const GridDensity& d,
                                const PointConfiguration& y,
                                bool merge_duplicates = false);

/// Power-cell assignment: cell center x gets argmin over active i of
/// c(x, y_i) - w[i]. Entries of w at inactive indices (lambda == 0) are
/// ignored. Lowest index wins ties.
CellPartition power_partition(const GridDensity& d, const PointConfiguration& y,
                              const std::vector<double>& w, const CostSpec& cost,
                              const TieWeights& lambda);

/// Convenience overload computing the tie weights from y.
CellPartition power_partition(const GridDensity& d, const PointConfiguration& y,
                              const std::vector<double>& w, const CostSpec& cost);

}  // namespace sdot
