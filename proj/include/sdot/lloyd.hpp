#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdot/dual.hpp"

namespace sdot {

struct LloydOptions {
    int max_iter = 10000;
    // Stop when ||Y_{n+1} - Y_n|| <= step_tol; < 0 selects
    // 1e-9 * diameter of the grid window.
    double step_tol = -1.0;
    bool check_descent = true;
    std::uint64_t seed = 0;      // used by random initialization helpers
    SolverOptions inner;         // uniform variant only
};

/// Per-iteration record of a Lloyd run. The CSV export carries the columns
/// n, loss, gradNorm, stepNorm, minCellMass, descentLHS, descentRHS,
/// innerIterations; the remaining fields are diagnostics kept in memory.
struct SolverTrace {
    struct Row {
        int n = 0;
        double loss = 0.0;
        double grad_norm = 0.0;
        double step_norm = 0.0;
        double min_cell_mass = 0.0;
        double descent_lhs = 0.0;
        double descent_rhs = 0.0;
        int inner_iterations = 0;
        // extras, not exported to CSV
        double intermediate_rhs = 0.0;   // (1/2) sum_i mass_i ||dy_i||^2
        double inner_residual = 0.0;     // max |lambda_i - mass_i| (uniform)
        double grad_step_gap = 0.0;      // ||Y_{n+1} - (Y_n - N grad)|| (uniform)
        bool outside_support = false;    // some iterate left supp(mu)
    };

    std::vector<Row> rows;
    bool converged = false;
    std::string stop_reason;
};

struct LloydResult {
    PointConfiguration points;
    SolverTrace trace;
    DualWeights weights;  // final dual weights (uniform variant)
};

// --- optimal quantization (free Dirac weights) ---

/// One half of the integral of the squared distance to the nearest point.
/// Defined on the diagonal too (the min collapses over duplicates).
double optimal_energy(const GridDensity& d, const PointConfiguration& y);

/// Voronoi barycenter map: each point moves to its region's barycenter.
/// Throws EmptyCellError when a region has zero mass.
PointConfiguration optimal_step(const GridDensity& d, const PointConfiguration& y);

/// Gradient of optimal_energy: row i is mass_i * (y_i - barycenter_i).
std::vector<Point> optimal_gradient(const GridDensity& d,
                                    const PointConfiguration& y);

LloydResult lloyd_optimal(const GridDensity& d, const PointConfiguration& y0,
                          const LloydOptions& opts = {});

// --- uniform quantization (fixed weights 1/N) ---

/// Halved maximized dual value (squared Euclidean cost, targets lambda(Y)),
/// plus the maximizing weights. Duplicate points route through the merged
/// dual. Throws DualNotConverged when the inner solve fails.
std::pair<double, DualWeights> uniform_energy(const GridDensity& d,
                                              const PointConfiguration& y,
                                              const SolverOptions& inner = {});

/// Equal-mass power-cell barycenter map, with the weights for warm starts.
std::pair<PointConfiguration, DualWeights> uniform_step(
    const GridDensity& d, const PointConfiguration& y,
    const SolverOptions& inner = {});

/// Gradient of uniform_energy: (1/N) (Y - B(Y)).
std::vector<Point> uniform_gradient(const GridDensity& d,
                                    const PointConfiguration& y,
                                    const SolverOptions& inner = {});

LloydResult lloyd_uniform(const GridDensity& d, const PointConfiguration& y0,
                          const LloydOptions& opts = {});

/// Seeded i.i.d. sample of N points from the grid measure (inverse CDF over
/// the flattened cells, uniform jitter inside each cell). Almost surely off
/// the diagonal and inside supp(mu).
PointConfiguration sample_points(const GridDensity& d, int n, std::uint64_t seed);

double frobenius_distance(const PointConfiguration& a, const PointConfiguration& b);

}  // namespace sdot
