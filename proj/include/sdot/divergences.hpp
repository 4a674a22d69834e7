#pragma once

#include <cstdint>
#include <vector>

#include "sdot/cost.hpp"
#include "sdot/density.hpp"
#include "sdot/dual.hpp"
#include "sdot/points.hpp"

namespace sdot {

/// Exact squared 2-Wasserstein distance between two weighted point sets on
/// the line, by merged traversal of the two quantile functions.
double w2_1d_discrete(const std::vector<double>& positions_a,
                      const std::vector<double>& weights_a,
                      const std::vector<double>& positions_b,
                      const std::vector<double>& weights_b);

struct SlicedConfig {
    int num_directions = 64;
    std::uint64_t seed = 0;
};

/// Monte Carlo sliced squared W2 between two discrete clouds: average of the
/// exact 1-D distance over uniformly sampled directions.
double sliced_w2_discrete(const DiscreteCloud& a, const DiscreteCloud& b,
                          const SlicedConfig& cfg);

struct MaxSlicedOptions {
    int num_starts = 16;
    int max_steps_per_start = 500;
    std::uint64_t seed = 0;
    double fd_step = 1e-5;       // tangent finite-difference step on the sphere
    double step_tol = 1e-12;
};

struct MaxSlicedResult {
    double value = 0.0;              // certified lower bound (feasible theta)
    std::vector<double> direction;   // unit vector attaining it
    int evaluations = 0;
};

/// Maximizes over unit directions the exact 1-D squared W2 between the
/// projected grid density and the projected discrete measure (ties merged).
/// Multi-start projected gradient ascent with finite-difference tangent
/// derivatives; in 1-D no search is needed.
MaxSlicedResult max_sliced_semidiscrete(const GridDensity& d,
                                        const PointConfiguration& y,
                                        const MaxSlicedOptions& opts = {});

struct EntropicConfig {
    double epsilon = 0.1;   // must be > 0
    int max_iter = 20000;
    double grad_tol = 1e-9;  // sup-norm of the dual gradient
};

struct EntropicReport {
    double value = 0.0;  // regularized transport loss W_eps
    DualWeights weights;
    std::vector<double> soft_masses;  // integral of softmax_i, sums to 1
    int iterations = 0;
    bool converged = false;
    bool hard_min_fallback = false;   // epsilon too small for stable exponentials
    bool potential_bound_exceeded = false;  // ||w||_inf above the Lipschitz estimate
};

/// Entropic dual objective at fixed weights (full-length w, inactive entries
/// ignored). The quantity entropic_semidiscrete maximizes.
double entropic_dual_objective(const GridDensity& d, const PointConfiguration& y,
                               const CostSpec& cost, double epsilon,
                               const std::vector<double>& w);

/// Smooth entropic dual ascent: maximizes
///   integral of -eps log(sum_i lambda_i exp((w_i - c(x, y_i)) / eps)) d(mu)
///   + sum_i lambda_i w_i - eps
/// with log-sum-exp max-subtraction; anchor first_zero. Throws
/// ConvergenceError when the gradient stays above grad_tol at max_iter.
EntropicReport entropic_semidiscrete(
    const GridDensity& d, const PointConfiguration& y, const CostSpec& cost,
    const EntropicConfig& cfg,
    const std::optional<std::vector<double>>& warm_start = {});

/// Evaluates entropic_semidiscrete along a decreasing epsilon schedule with
/// warm starts, for the compact-interval sweep diagnostics.
struct EpsilonSweep {
    std::vector<double> epsilons;
    std::vector<double> values;  // W_eps per epsilon
};

EpsilonSweep entropic_sweep(const GridDensity& d, const PointConfiguration& y,
                            const CostSpec& cost,
                            const std::vector<double>& epsilons,
                            const EntropicConfig& base_cfg);

}  // namespace sdot
