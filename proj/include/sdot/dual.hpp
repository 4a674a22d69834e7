#pragma once

#include <optional>
#include <vector>

#include "sdot/cells.hpp"
#include "sdot/cost.hpp"
#include "sdot/density.hpp"
#include "sdot/errors.hpp"
#include "sdot/points.hpp"

namespace sdot {

enum class WeightAnchor { mean_zero, first_zero };

/// Kantorovich potentials over the support points. The anchor pins the
/// additive constant: mean over active indices is 0, or the first active
/// entry is 0. Inactive indices carry w = 0 by convention.
struct DualWeights {
    std::vector<double> w;
    WeightAnchor anchor = WeightAnchor::mean_zero;
};

struct SolverOptions {
    // Requested max |lambda_i - mass_i|. <= 0 selects the default
    // max(1e-9, 2 * largest cell mass); whole-cell assignment cannot resolve
    // masses below that floor, so sub-floor requests trigger the exact
    // finishing stage (vertex search + boundary-atom splitting).
    double mass_tol = 0.0;
    int max_iter = 10000;
    bool verbose = false;
};

struct DualReport {
    DualWeights weights;
    double value = 0.0;                  // maximized dual objective
    std::vector<double> mass_residuals;  // lambda_i - mass(cell_i)
    int iterations = 0;
    bool converged = false;
    // True when the exact finishing stage ran; masses/barycenters below then
    // come from the optimal plan (boundary atoms split between regions),
    // otherwise from the whole-cell partition.
    bool exact_plan = false;
    std::vector<double> cell_masses;
    std::vector<Point> cell_barycenters;  // normalized: integral / mass
    double effective_mass_tol = 0.0;
};

struct DualNotConverged : Error {
    DualNotConverged(const std::string& msg, DualReport r)
        : Error(msg), report(std::move(r)) {}
    DualReport report;
};

/// Semi-discrete Kantorovich dual objective:
///   integral of min over active i of (c(x, y_i) - w_i) d(mu)
///   + sum_i lambda_i * w_i.
/// For squared Euclidean cost and lambda = 1/N this is twice the halved
/// functional used by the uniform quantization energy.
double dual_objective(const GridDensity& d, const PointConfiguration& y,
                      const std::vector<double>& w, const CostSpec& cost,
                      const TieWeights& lambda);

/// Maximizes the concave dual over the active weights by supergradient
/// ascent with Armijo backtracking (supergradient component i is
/// lambda_i - mass_i). Warm start optional. The anchor is applied on return.
DualReport solve_dual(const GridDensity& d, const PointConfiguration& y,
                      const CostSpec& cost, const TieWeights& lambda,
                      const SolverOptions& opts = {},
                      const std::optional<std::vector<double>>& warm_start = {},
                      WeightAnchor anchor = WeightAnchor::mean_zero);

/// Default termination tolerance on mass residuals for this grid.
double default_mass_tol(const GridDensity& d);

}  // namespace sdot
