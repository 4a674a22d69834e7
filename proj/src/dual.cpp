#include "sdot/dual.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>

namespace sdot {

namespace {

constexpr int kPolishMaxActive = 12;  // subset enumeration is 2^l

struct Atom {
    Point x;
    double mass;
};

// Compressed view of one dual problem: positive-mass atoms, active indices,
// dense cost matrix C[k * l + j] = c(x_k, y_active[j]).
struct Workspace {
    std::vector<Atom> atoms;
    std::vector<int> active;           // active slot -> original index
    std::vector<double> target;        // lambda over active slots
    std::vector<double> cost;          // atoms x active
    double cost_scale = 1.0;
    int l = 0;

    double at(std::size_t k, int j) const {
        return cost[k * static_cast<std::size_t>(l) + static_cast<std::size_t>(j)];
    }
};

Workspace make_workspace(const GridDensity& d, const PointConfiguration& y,
                         const CostSpec& cost, const TieWeights& lambda) {
    Workspace ws;
    const std::size_t cells = d.cell_count();
    ws.atoms.reserve(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        const double m = d.cell_mass(k);
        if (m > 0.0) ws.atoms.push_back({d.cell_center(k), m});
    }
    for (int i = 0; i < y.size(); ++i)
        if (lambda.lambda[static_cast<std::size_t>(i)] > 0.0) {
            ws.active.push_back(i);
            ws.target.push_back(lambda.lambda[static_cast<std::size_t>(i)]);
        }
    ws.l = static_cast<int>(ws.active.size());
    ws.cost.resize(ws.atoms.size() * static_cast<std::size_t>(ws.l));
    double scale = 0.0;
    for (std::size_t k = 0; k < ws.atoms.size(); ++k)
        for (int j = 0; j < ws.l; ++j) {
            const double c = cost(ws.atoms[k].x,
                                  y.pts[static_cast<std::size_t>(ws.active[j])], d.dim);
            ws.cost[k * static_cast<std::size_t>(ws.l) + j] = c;
            scale = std::max(scale, std::abs(c));
        }
    ws.cost_scale = std::max(scale, 1.0);
    return ws;
}

struct EvalResult {
    double value = 0.0;
    std::vector<double> masses;  // hard assignment, lowest index on ties
};

EvalResult evaluate(const Workspace& ws, const std::vector<double>& w) {
    EvalResult r;
    r.masses.assign(static_cast<std::size_t>(ws.l), 0.0);
    long double acc = 0.0L;
    std::vector<long double> mass(static_cast<std::size_t>(ws.l), 0.0L);
    for (std::size_t k = 0; k < ws.atoms.size(); ++k) {
        int best = 0;
        double bv = ws.at(k, 0) - w[0];
        for (int j = 1; j < ws.l; ++j) {
            const double v = ws.at(k, j) - w[static_cast<std::size_t>(j)];
            if (v < bv) {
                bv = v;
                best = j;
            }
        }
        acc += static_cast<long double>(ws.atoms[k].mass) * bv;
        mass[static_cast<std::size_t>(best)] += ws.atoms[k].mass;
    }
    for (int j = 0; j < ws.l; ++j) {
        acc += static_cast<long double>(ws.target[static_cast<std::size_t>(j)]) *
               w[static_cast<std::size_t>(j)];
        r.masses[static_cast<std::size_t>(j)] =
            static_cast<double>(mass[static_cast<std::size_t>(j)]);
    }
    r.value = static_cast<double>(acc);
    return r;
}

double max_abs_residual(const Workspace& ws, const std::vector<double>& masses) {
    double r = 0.0;
    for (int j = 0; j < ws.l; ++j)
        r = std::max(r, std::abs(ws.target[static_cast<std::size_t>(j)] -
                                 masses[static_cast<std::size_t>(j)]));
    return r;
}

// Exact maximization of the piecewise-linear dual along w + t * 1_S, t >= 0.
// Atom k joins the S side once t exceeds min_{j in S}(c-w) - min_{j not in S}(c-w).
// Returns the step (0 when the direction does not ascend).
double line_search_along(const Workspace& ws, const std::vector<double>& w,
                         std::uint32_t mask) {
    double lam_s = 0.0;
    for (int j = 0; j < ws.l; ++j)
        if (mask & (1u << j)) lam_s += ws.target[static_cast<std::size_t>(j)];

    long double joined = 0.0L;
    std::vector<std::pair<double, double>> breakpoints;  // (t, mass)
    breakpoints.reserve(ws.atoms.size());
    for (std::size_t k = 0; k < ws.atoms.size(); ++k) {
        double in_s = std::numeric_limits<double>::infinity();
        double out_s = std::numeric_limits<double>::infinity();
        for (int j = 0; j < ws.l; ++j) {
            const double v = ws.at(k, j) - w[static_cast<std::size_t>(j)];
            if (mask & (1u << j)) {
                if (v < in_s) in_s = v;
            } else {
                if (v < out_s) out_s = v;
            }
        }
        const double t = in_s - out_s;
        if (t <= 0.0)
            joined += ws.atoms[k].mass;
        else
            breakpoints.emplace_back(t, ws.atoms[k].mass);
    }

    // slope at 0+ must be positive for an ascent direction
    if (lam_s - static_cast<double>(joined) <= 1e-15) return 0.0;
    std::sort(breakpoints.begin(), breakpoints.end());

    const double hit_tol = 1e-13;
    std::size_t i = 0;
    while (i < breakpoints.size()) {
        // group atoms sharing one breakpoint
        const double t = breakpoints[i].first;
        long double group = 0.0L;
        std::size_t next = i;
        while (next < breakpoints.size() && breakpoints[next].first == t) {
            group += breakpoints[next].second;
            ++next;
        }
        const double after = static_cast<double>(joined + group);
        if (after >= lam_s - hit_tol) {
            if (std::abs(after - lam_s) <= hit_tol) {
                // exact hit: optimum is the flat segment past t; its midpoint
                // keeps the joining atoms strictly inside the S cells
                const double t_next = next < breakpoints.size()
                                          ? breakpoints[next].first
                                          : t + 1.0;
                return 0.5 * (t + t_next);
            }
            return t;  // vertex, the group straddles the target
        }
        joined += group;
        i = next;
    }
    return 0.0;  // cannot cross (inactive numerically); treat as no step
}

// One pass of exact line searches over the given subset directions. Returns
// the number of accepted steps; w is updated in place.
int polish_pass(const Workspace& ws, std::vector<double>& w,
                const std::vector<std::uint32_t>& masks, double& value) {
    int accepted = 0;
    for (const std::uint32_t mask : masks) {
        const double t = line_search_along(ws, w, mask);
        if (t <= 0.0) continue;
        std::vector<double> trial = w;
        for (int j = 0; j < ws.l; ++j)
            if (mask & (1u << j)) trial[static_cast<std::size_t>(j)] += t;
        const EvalResult ev = evaluate(ws, trial);
        if (ev.value > value + 1e-16 * ws.cost_scale) {
            w = std::move(trial);
            value = ev.value;
            ++accepted;
        }
    }
    return accepted;
}

std::vector<std::uint32_t> all_proper_subsets(int l) {
    std::vector<std::uint32_t> masks;
    const std::uint32_t full = (1u << l) - 1u;
    masks.reserve(full - 1);
    for (std::uint32_t m = 1; m < full; ++m) masks.push_back(m);
    return masks;
}

std::vector<std::uint32_t> singleton_and_complements(int l) {
    std::vector<std::uint32_t> masks;
    const std::uint32_t full = (1u << l) - 1u;
    for (int j = 0; j < l; ++j) {
        masks.push_back(1u << j);
        if (l > 1) masks.push_back(full & ~(1u << j));
    }
    return masks;
}

// Splits atoms tied between several regions so every region mass equals its
// target exactly. Feasible at a dual vertex; solved as a tiny max-flow
// (BFS augmentation). Returns false when infeasible (w is not a vertex).
struct PlanStats {
    std::vector<double> masses;
    std::vector<Point> barycenters;
    std::vector<char> has_barycenter;
};

bool split_tied_atoms(const Workspace& ws, const std::vector<double>& w,
                      PlanStats& out) {
    const int l = ws.l;
    const double tie_tol = 1e-10 * ws.cost_scale;

    std::vector<long double> strict_mass(static_cast<std::size_t>(l), 0.0L);
    std::vector<long double> ix(static_cast<std::size_t>(l), 0.0L);
    std::vector<long double> iy(static_cast<std::size_t>(l), 0.0L);
    struct Tied {
        std::size_t atom;
        std::uint32_t mask;
    };
    std::vector<Tied> tied;

    for (std::size_t k = 0; k < ws.atoms.size(); ++k) {
        double bv = std::numeric_limits<double>::infinity();
        for (int j = 0; j < l; ++j)
            bv = std::min(bv, ws.at(k, j) - w[static_cast<std::size_t>(j)]);
        std::uint32_t mask = 0;
        for (int j = 0; j < l; ++j)
            if (ws.at(k, j) - w[static_cast<std::size_t>(j)] <= bv + tie_tol)
                mask |= 1u << j;
        if ((mask & (mask - 1)) == 0) {
            const int j = static_cast<int>(std::countr_zero(mask));
            const double m = ws.atoms[k].mass;
            strict_mass[static_cast<std::size_t>(j)] += m;
            ix[static_cast<std::size_t>(j)] += m * ws.atoms[k].x[0];
            iy[static_cast<std::size_t>(j)] += m * ws.atoms[k].x[1];
        } else {
            tied.push_back({k, mask});
        }
    }

    // flow network: source, tied atoms, regions, sink
    const int t_count = static_cast<int>(tied.size());
    if (t_count > 4096) return false;
    const int num_nodes = 2 + t_count + l;
    const int src = 0, snk = num_nodes - 1;
    auto atom_node = [&](int t) { return 1 + t; };
    auto cell_node = [&](int j) { return 1 + t_count + j; };

    struct Edge {
        int to;
        double cap;
        int rev;
    };
    std::vector<std::vector<Edge>> g(static_cast<std::size_t>(num_nodes));
    auto add_edge = [&](int a, int b, double cap) {
        g[static_cast<std::size_t>(a)].push_back(
            {b, cap, static_cast<int>(g[static_cast<std::size_t>(b)].size())});
        g[static_cast<std::size_t>(b)].push_back(
            {a, 0.0, static_cast<int>(g[static_cast<std::size_t>(a)].size()) - 1});
    };

    long double tied_total = 0.0L;
    for (int t = 0; t < t_count; ++t) {
        add_edge(src, atom_node(t), ws.atoms[tied[static_cast<std::size_t>(t)].atom].mass);
        tied_total += ws.atoms[tied[static_cast<std::size_t>(t)].atom].mass;
        for (int j = 0; j < l; ++j)
            if (tied[static_cast<std::size_t>(t)].mask & (1u << j))
                add_edge(atom_node(t), cell_node(j),
                         std::numeric_limits<double>::infinity());
    }
    const double feas_tol = 1e-9 * (1.0 + static_cast<double>(tied_total));
    for (int j = 0; j < l; ++j) {
        const double deficit = ws.target[static_cast<std::size_t>(j)] -
                               static_cast<double>(strict_mass[static_cast<std::size_t>(j)]);
        if (deficit < -feas_tol) return false;  // strict mass already overshoots
        add_edge(cell_node(j), snk, std::max(deficit, 0.0));
    }

    // Edmonds-Karp
    double flow = 0.0;
    for (;;) {
        std::vector<int> prev_node(static_cast<std::size_t>(num_nodes), -1);
        std::vector<int> prev_edge(static_cast<std::size_t>(num_nodes), -1);
        std::queue<int> q;
        q.push(src);
        prev_node[static_cast<std::size_t>(src)] = src;
        while (!q.empty() && prev_node[static_cast<std::size_t>(snk)] < 0) {
            const int u = q.front();
            q.pop();
            for (std::size_t e = 0; e < g[static_cast<std::size_t>(u)].size(); ++e) {
                const Edge& ed = g[static_cast<std::size_t>(u)][e];
                if (ed.cap > 1e-15 && prev_node[static_cast<std::size_t>(ed.to)] < 0) {
                    prev_node[static_cast<std::size_t>(ed.to)] = u;
                    prev_edge[static_cast<std::size_t>(ed.to)] = static_cast<int>(e);
                    q.push(ed.to);
                }
            }
        }
        if (prev_node[static_cast<std::size_t>(snk)] < 0) break;
        double aug = std::numeric_limits<double>::infinity();
        for (int v = snk; v != src; v = prev_node[static_cast<std::size_t>(v)]) {
            const Edge& ed = g[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                              [static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(v)])];
            aug = std::min(aug, ed.cap);
        }
        for (int v = snk; v != src; v = prev_node[static_cast<std::size_t>(v)]) {
            Edge& ed = g[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                        [static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(v)])];
            ed.cap -= aug;
            g[static_cast<std::size_t>(ed.to)][static_cast<std::size_t>(ed.rev)].cap += aug;
        }
        flow += aug;
    }
    if (std::abs(flow - static_cast<double>(tied_total)) > feas_tol) return false;

    // recover per-(atom, region) flow from residual reverse capacities
    for (int t = 0; t < t_count; ++t) {
        const std::size_t k = tied[static_cast<std::size_t>(t)].atom;
        for (const Edge& ed : g[static_cast<std::size_t>(atom_node(t))]) {
            if (ed.to < cell_node(0) || ed.to >= cell_node(l)) continue;
            const int j = ed.to - cell_node(0);
            const double sent =
                g[static_cast<std::size_t>(ed.to)][static_cast<std::size_t>(ed.rev)].cap;
            if (sent <= 0.0) continue;
            strict_mass[static_cast<std::size_t>(j)] += sent;
            ix[static_cast<std::size_t>(j)] += sent * ws.atoms[k].x[0];
            iy[static_cast<std::size_t>(j)] += sent * ws.atoms[k].x[1];
        }
    }

    out.masses.resize(static_cast<std::size_t>(l));
    out.barycenters.assign(static_cast<std::size_t>(l), {0.0, 0.0});
    out.has_barycenter.assign(static_cast<std::size_t>(l), 0);
    for (int j = 0; j < l; ++j) {
        const std::size_t s = static_cast<std::size_t>(j);
        out.masses[s] = static_cast<double>(strict_mass[s]);
        if (strict_mass[s] > 0.0L) {
            out.barycenters[s] = {static_cast<double>(ix[s] / strict_mass[s]),
                                  static_cast<double>(iy[s] / strict_mass[s])};
            out.has_barycenter[s] = 1;
        }
    }
    return true;
}

void validate_targets(const PointConfiguration& y, const TieWeights& lambda) {
    if (lambda.lambda.size() != static_cast<std::size_t>(y.size()))
        throw ArgumentError("target weights must have length N");
    long double sum = 0.0L;
    bool any = false;
    for (double l : lambda.lambda) {
        if (l < 0.0 || !std::isfinite(l))
            throw ArgumentError("target weights must be nonnegative and finite");
        if (l > 0.0) any = true;
        sum += l;
    }
    if (!any) throw ArgumentError("at least one target weight must be positive");
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-9)
        throw ArgumentError("target weights must sum to 1");
}

}  // namespace

double default_mass_tol(const GridDensity& d) {
    double largest = 0.0;
    for (std::size_t k = 0; k < d.cell_count(); ++k)
        largest = std::max(largest, d.cell_mass(k));
    return std::max(1e-9, 2.0 * largest);
}

double dual_objective(const GridDensity& d, const PointConfiguration& y,
                      const std::vector<double>& w, const CostSpec& cost,
                      const TieWeights& lambda) {
    validate_targets(y, lambda);
    if (w.size() != static_cast<std::size_t>(y.size()))
        throw ArgumentError("dual_objective: w must have length N");
    long double acc = 0.0L;
    const std::size_t cells = d.cell_count();
    for (std::size_t k = 0; k < cells; ++k) {
        const double m = d.cell_mass(k);
        if (m == 0.0) continue;
        const Point x = d.cell_center(k);
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < y.size(); ++i) {
            if (lambda.lambda[static_cast<std::size_t>(i)] <= 0.0) continue;
            best = std::min(best, cost(x, y.pts[static_cast<std::size_t>(i)], d.dim) -
                                      w[static_cast<std::size_t>(i)]);
        }
        acc += static_cast<long double>(m) * best;
    }
    for (int i = 0; i < y.size(); ++i)
        acc += static_cast<long double>(lambda.lambda[static_cast<std::size_t>(i)]) *
               w[static_cast<std::size_t>(i)];
    return static_cast<double>(acc);
}

DualReport solve_dual(const GridDensity& d, const PointConfiguration& y,
                      const CostSpec& cost, const TieWeights& lambda,
                      const SolverOptions& opts,
                      const std::optional<std::vector<double>>& warm_start,
                      WeightAnchor anchor) {
    validate_targets(y, lambda);
    require_finite(y, "solve_dual");
    Workspace ws = make_workspace(d, y, cost, lambda);
    const int l = ws.l;
    const int n = y.size();

    const double floor_tol = default_mass_tol(d);
    const double requested = opts.mass_tol > 0.0 ? opts.mass_tol : floor_tol;
    const double ascent_tol = std::max(requested, floor_tol);

    std::vector<double> w(static_cast<std::size_t>(l), 0.0);
    if (warm_start) {
        if (warm_start->size() != static_cast<std::size_t>(n))
            throw ArgumentError("warm start weights must have length N");
        for (int j = 0; j < l; ++j)
            w[static_cast<std::size_t>(j)] =
                (*warm_start)[static_cast<std::size_t>(ws.active[j])];
    }

    EvalResult ev = evaluate(ws, w);
    int iterations = 0;
    bool stalled = false;

    if (l > 1) {
        // supergradient ascent, Armijo backtracking: initial step 1, shrink 1/2,
        // slope fraction 0.1
        while (max_abs_residual(ws, ev.masses) > ascent_tol &&
               iterations < opts.max_iter) {
            std::vector<double> grad(static_cast<std::size_t>(l));
            double gnorm2 = 0.0;
            for (int j = 0; j < l; ++j) {
                grad[static_cast<std::size_t>(j)] =
                    ws.target[static_cast<std::size_t>(j)] -
                    ev.masses[static_cast<std::size_t>(j)];
                gnorm2 += grad[static_cast<std::size_t>(j)] *
                          grad[static_cast<std::size_t>(j)];
            }
            double step = 1.0;
            bool accepted = false;
            std::vector<double> trial(static_cast<std::size_t>(l));
            for (int bt = 0; bt < 60; ++bt) {
                for (int j = 0; j < l; ++j)
                    trial[static_cast<std::size_t>(j)] =
                        w[static_cast<std::size_t>(j)] +
                        step * grad[static_cast<std::size_t>(j)];
                const EvalResult tev = evaluate(ws, trial);
                if (tev.value >= ev.value + 0.1 * step * gnorm2) {
                    w = trial;
                    ev = tev;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            ++iterations;
            if (opts.verbose)
                std::fprintf(stderr,
                             "dual iter %d: value %.12g, max residual %.3e, "
                             "step %.3e\n",
                             iterations, ev.value, max_abs_residual(ws, ev.masses),
                             step);
            if (!accepted) {
                stalled = true;
                break;
            }
        }
    }

    // Exact finishing stage: either the caller asked for a tolerance the
    // whole-cell masses cannot resolve, or the ascent stalled short of it.
    // The subset bitmasks cap this machinery at 31 active points.
    const bool want_exact = requested < floor_tol;
    bool at_vertex = false;
    if (l > 1 && l <= 31 &&
        (want_exact || stalled || max_abs_residual(ws, ev.masses) > ascent_tol)) {
        std::vector<std::uint32_t> masks = l <= kPolishMaxActive
                                               ? all_proper_subsets(l)
                                               : singleton_and_complements(l);
        for (int pass = 0; pass < 200; ++pass) {
            const int accepted = polish_pass(ws, w, masks, ev.value);
            iterations += accepted;
            if (accepted == 0) {
                at_vertex = l <= kPolishMaxActive;
                break;
            }
        }
        ev = evaluate(ws, w);
    }
    if (l == 1) at_vertex = true;

    DualReport rep;
    rep.iterations = iterations;
    rep.effective_mass_tol = requested;
    rep.value = ev.value;

    // masses and barycenters: optimal plan (split boundary atoms) when an
    // exact vertex was reached and sub-floor accuracy is wanted, otherwise
    // whole-cell statistics
    PlanStats plan;
    bool have_plan = false;
    if (at_vertex && want_exact) have_plan = split_tied_atoms(ws, w, plan);
    if (!have_plan && at_vertex && max_abs_residual(ws, ev.masses) > requested)
        have_plan = split_tied_atoms(ws, w, plan);  // stall rescue

    rep.exact_plan = have_plan;
    rep.cell_masses.assign(static_cast<std::size_t>(n), 0.0);
    rep.cell_barycenters.assign(static_cast<std::size_t>(n), {0.0, 0.0});
    rep.mass_residuals.assign(static_cast<std::size_t>(n), 0.0);

    std::vector<long double> bary_int_x, bary_int_y;
    if (!have_plan) {
        // recompute hard-assignment barycenters
        bary_int_x.assign(static_cast<std::size_t>(l), 0.0L);
        bary_int_y.assign(static_cast<std::size_t>(l), 0.0L);
        std::vector<long double> mass(static_cast<std::size_t>(l), 0.0L);
        for (std::size_t k = 0; k < ws.atoms.size(); ++k) {
            int best = 0;
            double bv = ws.at(k, 0) - w[0];
            for (int j = 1; j < l; ++j) {
                const double v = ws.at(k, j) - w[static_cast<std::size_t>(j)];
                if (v < bv) {
                    bv = v;
                    best = j;
                }
            }
            const std::size_t b = static_cast<std::size_t>(best);
            mass[b] += ws.atoms[k].mass;
            bary_int_x[b] += ws.atoms[k].mass * ws.atoms[k].x[0];
            bary_int_y[b] += ws.atoms[k].mass * ws.atoms[k].x[1];
        }
        plan.masses.resize(static_cast<std::size_t>(l));
        plan.barycenters.assign(static_cast<std::size_t>(l), {0.0, 0.0});
        plan.has_barycenter.assign(static_cast<std::size_t>(l), 0);
        for (int j = 0; j < l; ++j) {
            const std::size_t s = static_cast<std::size_t>(j);
            plan.masses[s] = static_cast<double>(mass[s]);
            if (mass[s] > 0.0L) {
                plan.barycenters[s] = {static_cast<double>(bary_int_x[s] / mass[s]),
                                       static_cast<double>(bary_int_y[s] / mass[s])};
                plan.has_barycenter[s] = 1;
            }
        }
    }

    double max_resid = 0.0;
    for (int j = 0; j < l; ++j) {
        const std::size_t s = static_cast<std::size_t>(j);
        const std::size_t orig = static_cast<std::size_t>(ws.active[j]);
        rep.cell_masses[orig] = plan.masses[s];
        rep.cell_barycenters[orig] = plan.barycenters[s];
        rep.mass_residuals[orig] = ws.target[s] - plan.masses[s];
        max_resid = std::max(max_resid, std::abs(rep.mass_residuals[orig]));
    }
    rep.converged = max_resid <= requested;

    // anchor over active entries; inactive stay 0
    double shift = 0.0;
    if (anchor == WeightAnchor::mean_zero) {
        long double s = 0.0L;
        for (double v : w) s += v;
        shift = static_cast<double>(s / static_cast<long double>(l));
    } else {
        shift = w.empty() ? 0.0 : w[0];
    }
    rep.weights.anchor = anchor;
    rep.weights.w.assign(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < l; ++j)
        rep.weights.w[static_cast<std::size_t>(ws.active[j])] =
            w[static_cast<std::size_t>(j)] - shift;

    return rep;
}

}  // namespace sdot
