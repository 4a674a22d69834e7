#pragma once

#include <vector>

#include "sdot/density.hpp"

namespace sdot {

/// The N candidate support points of the discrete measure.
struct PointConfiguration {
    int dim = 0;
    std::vector<Point> pts;

    PointConfiguration() = default;
    PointConfiguration(int dimension, std::vector<Point> points)
        : dim(dimension), pts(std::move(points)) {}

    int size() const { return static_cast<int>(pts.size()); }

    // True iff two points coincide exactly (coordinate-wise float equality).
    bool on_diagonal() const;
};

/// Dirac weights after merging coincident points: a group's whole mass goes
/// to its first index, later duplicates get 0. Off the diagonal every entry
/// is 1/N.
struct TieWeights {
    std::vector<double> lambda;

    int active_count() const;
    // Index of the first active entry.
    int first_active() const;
};

TieWeights tie_weights(const PointConfiguration& y);

/// Weighted point cloud in arbitrary dimension, used by the sliced distances.
struct DiscreteCloud {
    int dim = 0;
    std::vector<double> coords;   // flat, point i at [i*dim, (i+1)*dim)
    std::vector<double> weights;  // on the simplex

    int size() const { return dim ? static_cast<int>(coords.size()) / dim : 0; }
};

}  // namespace sdot
