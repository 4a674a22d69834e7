#include "sdot/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sdot/errors.hpp"
#include "sdot/random.hpp"

namespace sdot {

namespace {

void validate_simplex(const std::vector<double>& w, const char* who) {
    long double s = 0.0L;
    for (double v : w) {
        if (v < 0.0 || !std::isfinite(v))
            throw ArgumentError(std::string(who) + ": weights must be nonnegative");
        s += v;
    }
    if (std::abs(static_cast<double>(s) - 1.0) > 1e-12)
        throw ArgumentError(std::string(who) + ": weights must sum to 1");
}

struct WeightedLine {
    std::vector<double> pos;
    std::vector<double> w;
};

WeightedLine sorted_line(const std::vector<double>& positions,
                         const std::vector<double>& weights) {
    std::vector<std::size_t> idx(positions.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return positions[a] < positions[b];
    });
    WeightedLine out;
    out.pos.reserve(positions.size());
    out.w.reserve(positions.size());
    for (std::size_t i : idx) {
        if (weights[i] == 0.0) continue;
        out.pos.push_back(positions[i]);
        out.w.push_back(weights[i]);
    }
    return out;
}

double w2_1d_sorted(const WeightedLine& a, const WeightedLine& b) {
    long double acc = 0.0L;
    std::size_t i = 0, j = 0;
    double wa = a.w.empty() ? 0.0 : a.w[0];
    double wb = b.w.empty() ? 0.0 : b.w[0];
    while (i < a.pos.size() && j < b.pos.size()) {
        const double delta = std::min(wa, wb);
        const double diff = a.pos[i] - b.pos[j];
        acc += static_cast<long double>(delta) * diff * diff;
        wa -= delta;
        wb -= delta;
        if (wa == 0.0) {
            ++i;
            if (i < a.pos.size()) wa = a.w[i];
        }
        if (wb == 0.0) {
            ++j;
            if (j < b.pos.size()) wb = b.w[j];
        }
    }
    return static_cast<double>(acc);
}

}  // namespace

double w2_1d_discrete(const std::vector<double>& positions_a,
                      const std::vector<double>& weights_a,
                      const std::vector<double>& positions_b,
                      const std::vector<double>& weights_b) {
    if (positions_a.size() != weights_a.size() ||
        positions_b.size() != weights_b.size() || positions_a.empty() ||
        positions_b.empty())
        throw ArgumentError("w2_1d_discrete: positions/weights size mismatch");
    validate_simplex(weights_a, "w2_1d_discrete");
    validate_simplex(weights_b, "w2_1d_discrete");
    return w2_1d_sorted(sorted_line(positions_a, weights_a),
                        sorted_line(positions_b, weights_b));
}

double sliced_w2_discrete(const DiscreteCloud& a, const DiscreteCloud& b,
                          const SlicedConfig& cfg) {
    if (a.dim < 1 || a.dim != b.dim)
        throw ArgumentError("sliced_w2_discrete: clouds need a common dimension >= 1");
    if (cfg.num_directions < 1)
        throw ArgumentError("sliced_w2_discrete: need at least one direction");
    validate_simplex(a.weights, "sliced_w2_discrete");
    validate_simplex(b.weights, "sliced_w2_discrete");

    Rng rng(cfg.seed);
    const int d = a.dim;
    std::vector<double> pa(static_cast<std::size_t>(a.size()));
    std::vector<double> pb(static_cast<std::size_t>(b.size()));
    long double acc = 0.0L;
    for (int dir = 0; dir < cfg.num_directions; ++dir) {
        const std::vector<double> theta = rng.unit_vector(d);
        for (int i = 0; i < a.size(); ++i) {
            double s = 0.0;
            for (int c = 0; c < d; ++c)
                s += theta[static_cast<std::size_t>(c)] *
                     a.coords[static_cast<std::size_t>(i * d + c)];
            pa[static_cast<std::size_t>(i)] = s;
        }
        for (int i = 0; i < b.size(); ++i) {
            double s = 0.0;
            for (int c = 0; c < d; ++c)
                s += theta[static_cast<std::size_t>(c)] *
                     b.coords[static_cast<std::size_t>(i * d + c)];
            pb[static_cast<std::size_t>(i)] = s;
        }
        acc += w2_1d_sorted(sorted_line(pa, a.weights), sorted_line(pb, b.weights));
    }
    return static_cast<double>(acc / cfg.num_directions);
}

namespace {

struct SemiDiscreteProjector {
    std::vector<Point> atom_pos;
    std::vector<double> atom_mass;
    std::vector<Point> points;
    std::vector<double> lambda;
    int dim = 0;

    double value(const std::vector<double>& theta) const {
        std::vector<double> pa(atom_pos.size());
        for (std::size_t k = 0; k < atom_pos.size(); ++k) {
            double s = 0.0;
            for (int c = 0; c < dim; ++c) s += theta[static_cast<std::size_t>(c)] * atom_pos[k][c];
            pa[k] = s;
        }
        std::vector<double> pb(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            double s = 0.0;
            for (int c = 0; c < dim; ++c) s += theta[static_cast<std::size_t>(c)] * points[i][c];
            pb[i] = s;
        }
        return w2_1d_sorted(sorted_line(pa, atom_mass), sorted_line(pb, lambda));
    }
};

std::vector<double> normalized(std::vector<double> v) {
    double n2 = 0.0;
    for (double c : v) n2 += c * c;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& c : v) c *= inv;
    return v;
}

// orthonormal tangent basis at theta (Gram-Schmidt over coordinate axes)
std::vector<std::vector<double>> tangent_basis(const std::vector<double>& theta) {
    const int d = static_cast<int>(theta.size());
    std::vector<std::vector<double>> basis;
    for (int axis = 0; axis < d && static_cast<int>(basis.size()) < d - 1; ++axis) {
        std::vector<double> v(static_cast<std::size_t>(d), 0.0);
        v[static_cast<std::size_t>(axis)] = 1.0;
        double dot = theta[static_cast<std::size_t>(axis)];
        for (int c = 0; c < d; ++c) v[static_cast<std::size_t>(c)] -= dot * theta[static_cast<std::size_t>(c)];
        for (const auto& b : basis) {
            double p = 0.0;
            for (int c = 0; c < d; ++c) p += v[static_cast<std::size_t>(c)] * b[static_cast<std::size_t>(c)];
            for (int c = 0; c < d; ++c) v[static_cast<std::size_t>(c)] -= p * b[static_cast<std::size_t>(c)];
        }
        double n2 = 0.0;
        for (double c : v) n2 += c * c;
        if (n2 < 1e-20) continue;
        const double inv = 1.0 / std::sqrt(n2);
        for (double& c : v) c *= inv;
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace

MaxSlicedResult max_sliced_semidiscrete(const GridDensity& d,
                                        const PointConfiguration& y,
                                        const MaxSlicedOptions& opts) {
    if (d.dim < 1) throw ArgumentError("max_sliced: dimension must be >= 1");
    if (y.size() < 1) throw ArgumentError("max_sliced: empty configuration");

    SemiDiscreteProjector proj;
    proj.dim = d.dim;
    for (std::size_t k = 0; k < d.cell_count(); ++k) {
        const double m = d.cell_mass(k);
        if (m == 0.0) continue;
        proj.atom_pos.push_back(d.cell_center(k));
        proj.atom_mass.push_back(m);
    }
    proj.points = y.pts;
    proj.lambda = tie_weights(y).lambda;

    MaxSlicedResult res;
    if (d.dim == 1) {
        // the unit sphere is {-1, +1} and both signs give the same distance
        res.direction = {1.0};
        res.value = proj.value(res.direction);
        res.evaluations = 1;
        return res;
    }

    Rng rng(opts.seed);
    res.value = -1.0;
    for (int start = 0; start < opts.num_starts; ++start) {
        std::vector<double> theta = rng.unit_vector(d.dim);
        double val = proj.value(theta);
        ++res.evaluations;
        if (val > res.value) {
            res.value = val;
            res.direction = theta;
        }
        double step0 = 1.0;
        for (int it = 0; it < opts.max_steps_per_start; ++it) {
            const auto basis = tangent_basis(theta);
            std::vector<double> grad_t(basis.size());
            double gnorm2 = 0.0;
            for (std::size_t a = 0; a < basis.size(); ++a) {
                std::vector<double> plus(theta), minus(theta);
                for (int c = 0; c < d.dim; ++c) {
                    plus[static_cast<std::size_t>(c)] += opts.fd_step * basis[a][static_cast<std::size_t>(c)];
                    minus[static_cast<std::size_t>(c)] -= opts.fd_step * basis[a][static_cast<std::size_t>(c)];
                }
                const double vp = proj.value(normalized(plus));
                const double vm = proj.value(normalized(minus));
                res.evaluations += 2;
                grad_t[a] = (vp - vm) / (2.0 * opts.fd_step);
                gnorm2 += grad_t[a] * grad_t[a];
            }
            if (gnorm2 < 1e-24) break;

            double step = step0;
            bool accepted = false;
            for (int bt = 0; bt < 40; ++bt) {
                std::vector<double> trial = theta;
                for (std::size_t a = 0; a < basis.size(); ++a)
                    for (int c = 0; c < d.dim; ++c)
                        trial[static_cast<std::size_t>(c)] +=
                            step * grad_t[a] * basis[a][static_cast<std::size_t>(c)];
                trial = normalized(trial);
                const double tv = proj.value(trial);
                ++res.evaluations;
                if (tv > val + 0.1 * step * gnorm2) {
                    theta = std::move(trial);
                    val = tv;
                    accepted = true;
                    step0 = std::min(step * 2.0, 1e6);
                    break;
                }
                step *= 0.5;
            }
            if (!accepted || step < opts.step_tol) break;
            if (val > res.value) {
                res.value = val;
                res.direction = theta;
            }
        }
    }
    return res;
}

namespace {

double lipschitz_estimate(const CostSpec& cost, double radius, int dim) {
    switch (cost.kind) {
        case CostKind::squared_euclidean:
            return 4.0 * radius;
        case CostKind::p_power:
            return cost.p * std::pow(2.0 * radius, cost.p - 1.0);
        case CostKind::custom: {
            // crude sampled slope bound over the enclosing ball
            Rng rng(12345);
            double lip = 0.0;
            for (int s = 0; s < 256; ++s) {
                Point x{rng.uniform(-radius, radius), 0.0};
                Point y1{rng.uniform(-radius, radius), 0.0};
                Point y2 = y1;
                if (dim > 1) {
                    x[1] = rng.uniform(-radius, radius);
                    y1[1] = rng.uniform(-radius, radius);
                    y2[1] = y1[1];
                }
                double dn = 0.0;
                for (int a = 0; a < dim; ++a) {
                    const double step = 1e-4 * radius * (rng.uniform() - 0.5);
                    y2[a] = y1[a] + step;
                    dn += step * step;
                }
                dn = std::sqrt(dn);
                if (dn == 0.0) continue;
                lip = std::max(lip, std::abs(cost(x, y1, dim) - cost(x, y2, dim)) / dn);
            }
            return lip;
        }
    }
    return 0.0;
}

}  // namespace

double entropic_dual_objective(const GridDensity& d, const PointConfiguration& y,
                               const CostSpec& cost, double epsilon,
                               const std::vector<double>& w) {
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
    const TieWeights lambda = tie_weights(y);
    if (w.size() != static_cast<std::size_t>(y.size()))
        throw ArgumentError("entropic_dual_objective: w must have length N");
    std::vector<double> loglam, wv;
    std::vector<int> active;
    for (int i = 0; i < y.size(); ++i)
        if (lambda.lambda[static_cast<std::size_t>(i)] > 0.0) {
            active.push_back(i);
            loglam.push_back(std::log(lambda.lambda[static_cast<std::size_t>(i)]));
            wv.push_back(w[static_cast<std::size_t>(i)]);
        }
    const int l = static_cast<int>(active.size());
    long double val = 0.0L;
    std::vector<double> buf(static_cast<std::size_t>(l));
    for (std::size_t k = 0; k < d.cell_count(); ++k) {
        const double m = d.cell_mass(k);
        if (m == 0.0) continue;
        const Point x = d.cell_center(k);
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < l; ++j) {
            buf[static_cast<std::size_t>(j)] =
                loglam[static_cast<std::size_t>(j)] +
                (wv[static_cast<std::size_t>(j)] -
                 cost(x, y.pts[static_cast<std::size_t>(active[j])], d.dim)) /
                    epsilon;
            mx = std::max(mx, buf[static_cast<std::size_t>(j)]);
        }
        double sum = 0.0;
        for (int j = 0; j < l; ++j) sum += std::exp(buf[static_cast<std::size_t>(j)] - mx);
        val -= static_cast<long double>(m) * epsilon * (mx + std::log(sum));
    }
    for (int j = 0; j < l; ++j)
        val += static_cast<long double>(
                   lambda.lambda[static_cast<std::size_t>(active[j])]) *
               wv[static_cast<std::size_t>(j)];
    return static_cast<double>(val) - epsilon;
}

EntropicReport entropic_semidiscrete(
    const GridDensity& d, const PointConfiguration& y, const CostSpec& cost,
    const EntropicConfig& cfg,
    const std::optional<std::vector<double>>& warm_start) {
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon))
        throw ArgumentError("entropic_semidiscrete: epsilon must be positive");
    const TieWeights lambda = tie_weights(y);
    const int n = y.size();

    struct Atom {
        Point x;
        double mass;
    };
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < d.cell_count(); ++k)
        if (d.cell_mass(k) > 0.0) atoms.push_back({d.cell_center(k), d.cell_mass(k)});

    std::vector<int> active;
    std::vector<double> lam, loglam;
    for (int i = 0; i < n; ++i)
        if (lambda.lambda[static_cast<std::size_t>(i)] > 0.0) {
            active.push_back(i);
            lam.push_back(lambda.lambda[static_cast<std::size_t>(i)]);
            loglam.push_back(std::log(lambda.lambda[static_cast<std::size_t>(i)]));
        }
    const int l = static_cast<int>(active.size());

    // dense cost matrix over active points
    std::vector<double> c(atoms.size() * static_cast<std::size_t>(l));
    double cost_scale = 1.0;
    for (std::size_t k = 0; k < atoms.size(); ++k)
        for (int j = 0; j < l; ++j) {
            const double v =
                cost(atoms[k].x, y.pts[static_cast<std::size_t>(active[j])], d.dim);
            c[k * static_cast<std::size_t>(l) + j] = v;
            cost_scale = std::max(cost_scale, std::abs(v));
        }

    EntropicReport rep;
    rep.weights.anchor = WeightAnchor::first_zero;
    rep.weights.w.assign(static_cast<std::size_t>(n), 0.0);
    rep.soft_masses.assign(static_cast<std::size_t>(n), 0.0);

    if (cfg.epsilon < 1e-12 * cost_scale) {
        // exponent spacing below double resolution: evaluate the hard-min dual
        rep.hard_min_fallback = true;
        DualReport hard = solve_dual(d, y, cost, lambda, {}, {},
                                     WeightAnchor::first_zero);
        rep.value = hard.value - cfg.epsilon;
        rep.weights = hard.weights;
        for (int i = 0; i < n; ++i)
            rep.soft_masses[static_cast<std::size_t>(i)] =
                hard.cell_masses[static_cast<std::size_t>(i)];
        rep.converged = hard.converged;
        rep.iterations = hard.iterations;
        return rep;
    }

    std::vector<double> w(static_cast<std::size_t>(l), 0.0);
    if (warm_start) {
        if (warm_start->size() != static_cast<std::size_t>(n))
            throw ArgumentError("entropic_semidiscrete: warm start must have length N");
        for (int j = 0; j < l; ++j)
            w[static_cast<std::size_t>(j)] =
                (*warm_start)[static_cast<std::size_t>(active[j])];
    }
    std::vector<double> soft(static_cast<std::size_t>(l), 0.0);
    std::vector<double> buf(static_cast<std::size_t>(l), 0.0);

    // value and soft marginals at w, log-sum-exp with max subtraction
    auto evaluate = [&](const std::vector<double>& wv, std::vector<double>& soft_out) {
        std::vector<long double> sm(static_cast<std::size_t>(l), 0.0L);
        long double val = 0.0L;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            double mx = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < l; ++j) {
                buf[static_cast<std::size_t>(j)] =
                    loglam[static_cast<std::size_t>(j)] +
                    (wv[static_cast<std::size_t>(j)] -
                     c[k * static_cast<std::size_t>(l) + j]) /
                        cfg.epsilon;
                mx = std::max(mx, buf[static_cast<std::size_t>(j)]);
            }
            double sum = 0.0;
            for (int j = 0; j < l; ++j) sum += std::exp(buf[static_cast<std::size_t>(j)] - mx);
            const double lse = mx + std::log(sum);
            val -= static_cast<long double>(atoms[k].mass) * cfg.epsilon * lse;
            for (int j = 0; j < l; ++j)
                sm[static_cast<std::size_t>(j)] +=
                    static_cast<long double>(atoms[k].mass) *
                    std::exp(buf[static_cast<std::size_t>(j)] - lse);
        }
        for (int j = 0; j < l; ++j) {
            val += static_cast<long double>(lam[static_cast<std::size_t>(j)]) *
                   wv[static_cast<std::size_t>(j)];
            soft_out[static_cast<std::size_t>(j)] =
                static_cast<double>(sm[static_cast<std::size_t>(j)]);
        }
        return static_cast<double>(val) - cfg.epsilon;
    };

    double value = evaluate(w, soft);
    double grad_inf = 0.0;
    for (int j = 0; j < l; ++j)
        grad_inf = std::max(grad_inf, std::abs(lam[static_cast<std::size_t>(j)] -
                                               soft[static_cast<std::size_t>(j)]));

    // ascent direction eps * log(lambda / soft): the diagonally preconditioned
    // gradient whose unit step is the Sinkhorn update; Armijo keeps it a
    // monotone line-search ascent of the same objective
    double step0 = 1.0;
    int it = 0;
    std::vector<double> dir(static_cast<std::size_t>(l));
    std::vector<double> trial(static_cast<std::size_t>(l));
    std::vector<double> soft_trial(static_cast<std::size_t>(l));
    for (; it < cfg.max_iter && grad_inf > cfg.grad_tol && l > 1; ++it) {
        double slope = 0.0;  // <gradient, direction>, positive termwise
        for (int j = 0; j < l; ++j) {
            const std::size_t s = static_cast<std::size_t>(j);
            dir[s] = cfg.epsilon * (std::log(lam[s]) - std::log(soft[s]));
            slope += (lam[s] - soft[s]) * dir[s];
        }
        double step = step0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (int j = 0; j < l; ++j)
                trial[static_cast<std::size_t>(j)] =
                    w[static_cast<std::size_t>(j)] +
                    step * dir[static_cast<std::size_t>(j)];
            const double tv = evaluate(trial, soft_trial);
            if (tv >= value + 0.1 * step * slope) {
                w.swap(trial);
                soft.swap(soft_trial);
                value = tv;
                accepted = true;
                step0 = std::min(step * 2.0, 4.0);
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        grad_inf = 0.0;
        for (int j = 0; j < l; ++j)
            grad_inf = std::max(grad_inf, std::abs(lam[static_cast<std::size_t>(j)] -
                                                   soft[static_cast<std::size_t>(j)]));
    }
    if (l == 1) grad_inf = std::abs(lam[0] - soft[0]);

    rep.iterations = it;
    rep.converged = grad_inf <= cfg.grad_tol;
    if (!rep.converged)
        throw ConvergenceError("entropic_semidiscrete: gradient norm " +
                               std::to_string(grad_inf) + " above tolerance after " +
                               std::to_string(it) + " iterations");

    // anchor: first active weight pinned to zero
    const double shift = w.empty() ? 0.0 : w[0];
    for (int j = 0; j < l; ++j) {
        rep.weights.w[static_cast<std::size_t>(active[j])] =
            w[static_cast<std::size_t>(j)] - shift;
        rep.soft_masses[static_cast<std::size_t>(active[j])] =
            soft[static_cast<std::size_t>(j)];
    }
    rep.value = value;

    // potentials should stay within the c-transform Lipschitz envelope
    Point hi = d.box_hi(), lo = d.box_lo();
    double radius = 0.0;
    for (int a = 0; a < d.dim; ++a)
        radius = std::max({radius, std::abs(hi[a]), std::abs(lo[a])});
    for (const auto& p : y.pts)
        for (int a = 0; a < d.dim; ++a) radius = std::max(radius, std::abs(p[a]));
    const double bound = 2.0 * lipschitz_estimate(cost, radius, d.dim) * radius;
    double winf = 0.0;
    for (double v : rep.weights.w) winf = std::max(winf, std::abs(v));
    rep.potential_bound_exceeded = bound > 0.0 && winf > bound;
    return rep;
}

EpsilonSweep entropic_sweep(const GridDensity& d, const PointConfiguration& y,
                            const CostSpec& cost,
                            const std::vector<double>& epsilons,
                            const EntropicConfig& base_cfg) {
    EpsilonSweep sweep;
    sweep.epsilons = epsilons;
    sweep.values.reserve(epsilons.size());
    std::optional<std::vector<double>> warm;
    for (double eps : epsilons) {
        EntropicConfig cfg = base_cfg;
        cfg.epsilon = eps;
        const EntropicReport rep = entropic_semidiscrete(d, y, cost, cfg, warm);
        sweep.values.push_back(rep.value);
        warm = rep.weights.w;
    }
    return sweep;
}

}  // namespace sdot
