#include "sdot/lloyd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdot/random.hpp"

namespace sdot {

namespace {

double effective_step_tol(const GridDensity& d, const LloydOptions& opts) {
    return opts.step_tol >= 0.0 ? opts.step_tol : 1e-9 * d.diameter();
}

double grad_frobenius(const std::vector<Point>& g, int dim) {
    long double s = 0.0L;
    for (const auto& r : g)
        for (int a = 0; a < dim; ++a) s += static_cast<long double>(r[a]) * r[a];
    return std::sqrt(static_cast<double>(s));
}

bool any_outside_support(const GridDensity& d, const PointConfiguration& y) {
    for (const auto& p : y.pts)
        if (!d.in_support(p)) return true;
    return false;
}

double half_sum_second_moments(const CellPartition& part) {
    long double s = 0.0L;
    for (const auto& r : part.regions) s += static_cast<long double>(r.second_moment);
    return 0.5 * static_cast<double>(s);
}

}  // namespace

double optimal_energy(const GridDensity& d, const PointConfiguration& y) {
    if (y.size() < 1) throw ArgumentError("optimal_energy: empty configuration");
    long double acc = 0.0L;
    const std::size_t cells = d.cell_count();
    for (std::size_t k = 0; k < cells; ++k) {
        const double m = d.cell_mass(k);
        if (m == 0.0) continue;
        const Point x = d.cell_center(k);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : y.pts) {
            double s = 0.0;
            for (int a = 0; a < d.dim; ++a) {
                const double diff = x[a] - p[a];
                s += diff * diff;
            }
            if (s < best) best = s;
        }
        acc += static_cast<long double>(m) * best;
    }
    return 0.5 * static_cast<double>(acc);
}

PointConfiguration optimal_step(const GridDensity& d, const PointConfiguration& y) {
    const CellPartition part = voronoi_partition(d, y);
    PointConfiguration next;
    next.dim = y.dim;
    next.pts.reserve(y.pts.size());
    for (int i = 0; i < y.size(); ++i) {
        const auto& r = part.regions[static_cast<std::size_t>(i)];
        if (!r.has_barycenter)
            throw EmptyCellError("optimal_step: region " + std::to_string(i) +
                                 " has zero mass");
        next.pts.push_back(r.barycenter);
    }
    return next;
}

std::vector<Point> optimal_gradient(const GridDensity& d,
                                    const PointConfiguration& y) {
    const CellPartition part = voronoi_partition(d, y);
    std::vector<Point> g(static_cast<std::size_t>(y.size()), {0.0, 0.0});
    for (int i = 0; i < y.size(); ++i) {
        const auto& r = part.regions[static_cast<std::size_t>(i)];
        if (!r.has_barycenter)
            throw EmptyCellError("optimal_gradient: region " + std::to_string(i) +
                                 " has zero mass");
        for (int a = 0; a < d.dim; ++a)
            g[static_cast<std::size_t>(i)][a] =
                r.mass * (y.pts[static_cast<std::size_t>(i)][a] - r.barycenter[a]);
    }
    return g;
}

LloydResult lloyd_optimal(const GridDensity& d, const PointConfiguration& y0,
                          const LloydOptions& opts) {
    if (y0.on_diagonal())
        throw DiagonalError("lloyd_optimal: initial points must be distinct");
    const double step_tol = effective_step_tol(d, opts);

    LloydResult res;
    res.points = y0;
    PointConfiguration y = y0;
    CellPartition part = voronoi_partition(d, y);
    double loss = half_sum_second_moments(part);
    double running_min_mass = std::numeric_limits<double>::infinity();

    for (int n = 0; n < opts.max_iter; ++n) {
        const int nn = y.size();
        PointConfiguration next;
        next.dim = y.dim;
        next.pts.resize(static_cast<std::size_t>(nn));
        std::vector<Point> grad(static_cast<std::size_t>(nn), {0.0, 0.0});
        long double step2 = 0.0L;
        long double intermediate = 0.0L;
        for (int i = 0; i < nn; ++i) {
            const auto& r = part.regions[static_cast<std::size_t>(i)];
            if (!r.has_barycenter)
                throw EmptyCellError("lloyd_optimal: region " + std::to_string(i) +
                                         " became empty",
                                     n);
            next.pts[static_cast<std::size_t>(i)] = r.barycenter;
            double d2 = 0.0;
            for (int a = 0; a < d.dim; ++a) {
                const double delta =
                    r.barycenter[a] - y.pts[static_cast<std::size_t>(i)][a];
                grad[static_cast<std::size_t>(i)][a] = -r.mass * delta;
                d2 += delta * delta;
            }
            step2 += d2;
            intermediate += 0.5L * static_cast<long double>(r.mass) * d2;
        }
        if (next.on_diagonal())
            throw DiagonalError("lloyd_optimal: iterate " + std::to_string(n + 1) +
                                " collapsed onto the diagonal");

        running_min_mass = std::min(running_min_mass, part.min_mass());
        const double step_norm = std::sqrt(static_cast<double>(step2));
        const double grad_norm = grad_frobenius(grad, d.dim);

        CellPartition part_next = voronoi_partition(d, next);
        const double loss_next = half_sum_second_moments(part_next);

        SolverTrace::Row row;
        row.n = n;
        row.loss = loss;
        row.grad_norm = grad_norm;
        row.step_norm = step_norm;
        row.min_cell_mass = part.min_mass();
        if (opts.check_descent) {
            row.descent_lhs = loss - loss_next;
            row.descent_rhs = 0.5 * running_min_mass * grad_norm * step_norm;
            row.intermediate_rhs = static_cast<double>(intermediate);
        }
        row.outside_support = any_outside_support(d, next);
        res.trace.rows.push_back(row);

        y = std::move(next);
        part = std::move(part_next);
        loss = loss_next;
        if (step_norm <= step_tol) {
            res.trace.converged = true;
            res.trace.stop_reason = "step_tol";
            break;
        }
    }
    if (!res.trace.converged) res.trace.stop_reason = "max_iter";
    res.points = std::move(y);
    return res;
}

std::pair<double, DualWeights> uniform_energy(const GridDensity& d,
                                              const PointConfiguration& y,
                                              const SolverOptions& inner) {
    const TieWeights lambda = tie_weights(y);
    DualReport rep = solve_dual(d, y, CostSpec::squared_euclidean_cost(), lambda,
                                inner);
    if (!rep.converged)
        throw DualNotConverged("uniform_energy: dual solve did not converge",
                               std::move(rep));
    return {0.5 * rep.value, rep.weights};
}

namespace {

// Shared inner solve for the uniform variant; requires distinct points.
DualReport uniform_inner_solve(const GridDensity& d, const PointConfiguration& y,
                               const SolverOptions& inner,
                               const std::optional<std::vector<double>>& warm) {
    if (y.on_diagonal())
        throw DiagonalError("uniform quantization step requires distinct points");
    const TieWeights lambda = tie_weights(y);
    return solve_dual(d, y, CostSpec::squared_euclidean_cost(), lambda, inner,
                      warm);
}

PointConfiguration barycenters_from_report(const PointConfiguration& y,
                                           const DualReport& rep) {
    PointConfiguration next;
    next.dim = y.dim;
    next.pts.resize(y.pts.size());
    for (int i = 0; i < y.size(); ++i) {
        if (!(rep.cell_masses[static_cast<std::size_t>(i)] > 0.0))
            throw EmptyCellError("uniform step: power cell " + std::to_string(i) +
                                 " carries no mass");
        next.pts[static_cast<std::size_t>(i)] =
            rep.cell_barycenters[static_cast<std::size_t>(i)];
    }
    return next;
}

}  // namespace

std::pair<PointConfiguration, DualWeights> uniform_step(
    const GridDensity& d, const PointConfiguration& y, const SolverOptions& inner) {
    DualReport rep = uniform_inner_solve(d, y, inner, {});
    if (!rep.converged)
        throw DualNotConverged("uniform_step: dual solve did not converge",
                               std::move(rep));
    return {barycenters_from_report(y, rep), rep.weights};
}

std::vector<Point> uniform_gradient(const GridDensity& d,
                                    const PointConfiguration& y,
                                    const SolverOptions& inner) {
    DualReport rep = uniform_inner_solve(d, y, inner, {});
    if (!rep.converged)
        throw DualNotConverged("uniform_gradient: dual solve did not converge",
                               std::move(rep));
    const PointConfiguration b = barycenters_from_report(y, rep);
    const double inv_n = 1.0 / y.size();
    std::vector<Point> g(y.pts.size(), {0.0, 0.0});
    for (int i = 0; i < y.size(); ++i)
        for (int a = 0; a < d.dim; ++a)
            g[static_cast<std::size_t>(i)][a] =
                inv_n * (y.pts[static_cast<std::size_t>(i)][a] -
                         b.pts[static_cast<std::size_t>(i)][a]);
    return g;
}

LloydResult lloyd_uniform(const GridDensity& d, const PointConfiguration& y0,
                          const LloydOptions& opts) {
    if (y0.on_diagonal())
        throw DiagonalError("lloyd_uniform: initial points must be distinct");
    const double step_tol = effective_step_tol(d, opts);
    const int nn = y0.size();
    const double inv_n = 1.0 / nn;

    LloydResult res;
    PointConfiguration y = y0;
    std::optional<std::vector<double>> warm;
    DualReport rep = uniform_inner_solve(d, y, opts.inner, warm);
    if (!rep.converged)
        throw DualNotConverged("lloyd_uniform: inner solve failed at iteration 0",
                               std::move(rep));

    for (int n = 0; n < opts.max_iter; ++n) {
        PointConfiguration next = barycenters_from_report(y, rep);
        if (next.on_diagonal())
            throw DiagonalError("lloyd_uniform: iterate " + std::to_string(n + 1) +
                                " collapsed onto the diagonal");

        long double step2 = 0.0L;
        std::vector<Point> grad(static_cast<std::size_t>(nn), {0.0, 0.0});
        for (int i = 0; i < nn; ++i) {
            double d2 = 0.0;
            for (int a = 0; a < d.dim; ++a) {
                const double delta = next.pts[static_cast<std::size_t>(i)][a] -
                                     y.pts[static_cast<std::size_t>(i)][a];
                grad[static_cast<std::size_t>(i)][a] = -inv_n * delta;
                d2 += delta * delta;
            }
            step2 += d2;
        }
        const double step_norm = std::sqrt(static_cast<double>(step2));

        double min_mass = std::numeric_limits<double>::infinity();
        double max_resid = 0.0;
        for (int i = 0; i < nn; ++i) {
            min_mass = std::min(min_mass, rep.cell_masses[static_cast<std::size_t>(i)]);
            max_resid = std::max(
                max_resid, std::abs(rep.mass_residuals[static_cast<std::size_t>(i)]));
        }

        warm = rep.weights.w;
        DualReport rep_next = uniform_inner_solve(d, next, opts.inner, warm);
        if (!rep_next.converged)
            throw DualNotConverged("lloyd_uniform: inner solve failed at iteration " +
                                       std::to_string(n + 1),
                                   std::move(rep_next));

        SolverTrace::Row row;
        row.n = n;
        row.loss = 0.5 * rep.value;
        row.grad_norm = grad_frobenius(grad, d.dim);
        row.step_norm = step_norm;
        row.min_cell_mass = min_mass;
        row.inner_iterations = rep.iterations;
        row.inner_residual = max_resid;
        if (opts.check_descent) {
            row.descent_lhs = 0.5 * rep.value - 0.5 * rep_next.value;
            row.descent_rhs = 0.5 * inv_n * static_cast<double>(step2);
        }
        // fixed-point step equals the gradient step Y - N grad by construction
        row.grad_step_gap = 0.0;
        row.outside_support = any_outside_support(d, next);
        res.trace.rows.push_back(row);

        y = std::move(next);
        rep = std::move(rep_next);
        if (step_norm <= step_tol) {
            res.trace.converged = true;
            res.trace.stop_reason = "step_tol";
            break;
        }
    }
    if (!res.trace.converged) res.trace.stop_reason = "max_iter";
    res.points = std::move(y);
    res.weights = rep.weights;
    return res;
}

PointConfiguration sample_points(const GridDensity& d, int n, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("sample_points: n must be >= 1");
    std::vector<double> cdf(d.cell_count());
    long double acc = 0.0L;
    for (std::size_t k = 0; k < d.cell_count(); ++k) {
        acc += static_cast<long double>(d.cell_mass(k));
        cdf[k] = static_cast<double>(acc);
    }
    const double total = cdf.back();
    Rng rng(seed);
    PointConfiguration y;
    y.dim = d.dim;
    y.pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        std::size_t k = static_cast<std::size_t>(it - cdf.begin());
        if (k >= d.cell_count()) k = d.cell_count() - 1;
        // jitter uniformly inside the cell: exact sampling of the
        // piecewise-constant density, almost surely distinct
        const int ix = static_cast<int>(k) % d.shape[0];
        const int iy = static_cast<int>(k) / d.shape[0];
        Point p{d.origin[0] + (ix + rng.uniform()) * d.spacing[0], 0.0};
        if (d.dim > 1) p[1] = d.origin[1] + (iy + rng.uniform()) * d.spacing[1];
        y.pts.push_back(p);
    }
    return y;
}

double frobenius_distance(const PointConfiguration& a, const PointConfiguration& b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.pts.size(); ++i)
        for (int c = 0; c < a.dim; ++c) {
            const double diff = a.pts[i][c] - b.pts[i][c];
            s += static_cast<long double>(diff) * diff;
        }
    return std::sqrt(static_cast<double>(s));
}

}  // namespace sdot
