#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "sdot/dual.hpp"
#include "sdot/random.hpp"

using namespace sdot;

namespace {

PointConfiguration points1d(std::initializer_list<double> xs) {
    PointConfiguration y;
    y.dim = 1;
    for (double x : xs) y.pts.push_back({x, 0.0});
    return y;
}

oracle::TransportInstance instance_from(const GridDensity& d,
                                        const PointConfiguration& y,
                                        const TieWeights& lambda,
                                        const CostSpec& cost) {
    oracle::TransportInstance inst;
    inst.dim = d.dim;
    for (std::size_t k = 0; k < d.cell_count(); ++k) {
        if (d.cell_mass(k) == 0.0) continue;
        inst.atom_pos.push_back(d.cell_center(k));
        inst.atom_mass.push_back(d.cell_mass(k));
    }
    for (int i = 0; i < y.size(); ++i) {
        if (lambda.lambda[static_cast<std::size_t>(i)] <= 0.0) continue;
        inst.site_pos.push_back(y.pts[static_cast<std::size_t>(i)]);
        inst.site_target.push_back(lambda.lambda[static_cast<std::size_t>(i)]);
    }
    inst.cost = [cost](const std::array<double, 2>& a,
                       const std::array<double, 2>& b,
                       int dim) { return cost(a, b, dim); };
    return inst;
}

GridDensity bumpy_1d_density(int cells, std::uint64_t seed) {
    GridDensity d = build_uniform_box({0.0}, {1.0}, {cells});
    Rng rng(seed);
    for (auto& v : d.values) v *= 0.2 + rng.uniform();
    d.normalize();
    return d;
}

}  // namespace

TEST_CASE("dual_objective: single point integrates the cost") {
    const GridDensity d = build_uniform_box({0.0}, {1.0}, {1000});
    const auto y = points1d({0.5});
    const double v = dual_objective(d, y, {0.0}, CostSpec::squared_euclidean_cost(),
                                    tie_weights(y));
    CHECK(v == doctest::Approx(1.0 / 12.0).epsilon(1e-6));
}

TEST_CASE("dual_objective: shift invariance over active weights") {
    const GridDensity d = bumpy_1d_density(300, 2);
    const auto y = points1d({0.1, 0.4, 0.4, 0.8});  // one duplicate
    const auto lambda = tie_weights(y);
    Rng rng(9);
    std::vector<double> w{0.05, -0.02, 0.0, 0.01};
    const CostSpec sq = CostSpec::squared_euclidean_cost();
    const double base = dual_objective(d, y, w, sq, lambda);
    for (int trial = 0; trial < 5; ++trial) {
        const double shift = rng.uniform(-1.0, 1.0);
        std::vector<double> ws = w;
        for (std::size_t i = 0; i < ws.size(); ++i) ws[i] += shift;
        CHECK(dual_objective(d, y, ws, sq, lambda) ==
              doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("dual_objective: two symmetric points give the split integral") {
    const GridDensity d = build_uniform_box({0.0}, {1.0}, {1000});
    const auto y = points1d({0.0, 1.0});
    const double v = dual_objective(d, y, {0.0, 0.0},
                                    CostSpec::squared_euclidean_cost(),
                                    tie_weights(y));
    CHECK(v == doctest::Approx(1.0 / 12.0).epsilon(1e-6));
}

TEST_CASE("dual_objective is concave in w") {
    const GridDensity d = bumpy_1d_density(200, 4);
    const auto y = points1d({0.15, 0.5, 0.85});
    const auto lambda = tie_weights(y);
    const CostSpec sq = CostSpec::squared_euclidean_cost();
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> w1(3), w2(3), wm(3);
        const double t = rng.uniform();
        for (int i = 0; i < 3; ++i) {
            w1[static_cast<std::size_t>(i)] = rng.uniform(-0.5, 0.5);
            w2[static_cast<std::size_t>(i)] = rng.uniform(-0.5, 0.5);
            wm[static_cast<std::size_t>(i)] =
                t * w1[static_cast<std::size_t>(i)] +
                (1.0 - t) * w2[static_cast<std::size_t>(i)];
        }
        const double vm = dual_objective(d, y, wm, sq, lambda);
        const double v1 = dual_objective(d, y, w1, sq, lambda);
        const double v2 = dual_objective(d, y, w2, sq, lambda);
        CHECK(vm >= t * v1 + (1.0 - t) * v2 - 1e-10);
    }
}

TEST_CASE("solve_dual: symmetric instance needs no weights") {
    const GridDensity d = build_uniform_box({0.0}, {1.0}, {1000});
    const auto y = points1d({0.0, 1.0});
    const auto rep = solve_dual(d, y, CostSpec::squared_euclidean_cost(),
                                tie_weights(y));
    CHECK(rep.converged);
    CHECK(rep.weights.w[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rep.weights.w[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rep.cell_masses[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(rep.value == doctest::Approx(1.0 / 12.0).epsilon(1e-6));
}

TEST_CASE("solve_dual: hand-solved asymmetric targets") {
    const GridDensity d = build_uniform_box({0.0}, {1.0}, {1000});
    const auto y = points1d({0.0, 1.0});
    TieWeights lambda;
    lambda.lambda = {0.75, 0.25};
    const auto rep = solve_dual(d, y, CostSpec::squared_euclidean_cost(), lambda);
    CHECK(rep.converged);
    // boundary at 0.75 forces w1 - w2 = 0.5, mean-zero anchor
    CHECK(rep.weights.w[0] == doctest::Approx(0.25).epsilon(0.01));
    CHECK(rep.weights.w[1] == doctest::Approx(-0.25).epsilon(0.01));
    CHECK(rep.cell_masses[0] == doctest::Approx(0.75).epsilon(1e-8));
}

TEST_CASE("solve_dual: single active point converges immediately") {
    const GridDensity d = build_uniform_box({0.0}, {1.0}, {64});
    const auto y = points1d({0.3});
    const auto rep = solve_dual(d, y, CostSpec::squared_euclidean_cost(),
                                tie_weights(y));
    CHECK(rep.converged);
    CHECK(rep.cell_masses[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rep.weights.w[0] == 0.0);
}

TEST_CASE("solve_dual: residuals sum to zero and value dominates warm starts") {
    const GridDensity d = bumpy_1d_density(400, 8);
    const auto y = points1d({0.2, 0.45, 0.8});
    const auto lambda = tie_weights(y);
    const CostSpec sq = CostSpec::squared_euclidean_cost();
    Rng rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> w0(3);
        for (auto& v : w0) v = rng.uniform(-0.3, 0.3);
        const auto rep = solve_dual(d, y, sq, lambda, {}, w0);
        double sum = 0.0;
        for (double r : rep.mass_residuals) sum += r;
        CHECK(std::abs(sum) <= 1e-12);
        // the ascent only improves on its starting point
        CHECK(rep.value >= dual_objective(d, y, w0, sq, lambda) - 1e-12);
    }
}

TEST_CASE("solve_dual value matches the exact transport oracle on small grids") {
    const CostSpec sq = CostSpec::squared_euclidean_cost();
    SolverOptions tight;
    tight.mass_tol = 1e-11;

    SUBCASE("1-D bumpy density, three sites") {
        const GridDensity d = bumpy_1d_density(40, 12);
        const auto y = points1d({0.12, 0.5, 0.93});
        const auto lambda = tie_weights(y);
        const auto rep = solve_dual(d, y, sq, lambda, tight);
        const auto plan = oracle::exact_transport(instance_from(d, y, lambda, sq));
        CHECK(rep.converged);
        CHECK(rep.value == doctest::Approx(plan.value).epsilon(1e-10));
        CHECK(std::abs(rep.value - plan.value) <= 1e-8);
    }

    SUBCASE("2-D uniform 7x7, four sites") {
        const GridDensity d = build_uniform_box({0.0, 0.0}, {1.0, 1.0}, {7, 7});
        PointConfiguration y{2, {{0.2, 0.2}, {0.8, 0.3}, {0.5, 0.9}, {0.3, 0.6}}};
        const auto lambda = tie_weights(y);
        const auto rep = solve_dual(d, y, sq, lambda, tight);
        const auto plan = oracle::exact_transport(instance_from(d, y, lambda, sq));
        CHECK(rep.converged);
        CHECK(std::abs(rep.value - plan.value) <= 1e-8);
    }

    SUBCASE("duplicates route their group mass to the first index") {
        const GridDensity d = bumpy_1d_density(30, 21);
        const auto y = points1d({0.3, 0.3, 0.75});
        const auto lambda = tie_weights(y);  // (2/3, 0, 1/3)
        const auto rep = solve_dual(d, y, sq, lambda, tight);
        const auto plan = oracle::exact_transport(instance_from(d, y, lambda, sq));
        CHECK(rep.converged);
        CHECK(std::abs(rep.value - plan.value) <= 1e-8);
        CHECK(rep.weights.w[1] == 0.0);  // inactive by convention
        CHECK(rep.cell_masses[1] == 0.0);
    }

    SUBCASE("euclidean (p = 1) cost") {
        const CostSpec p1 = CostSpec::p_power_cost(1.0);
        const GridDensity d = bumpy_1d_density(36, 33);
        const auto y = points1d({0.25, 0.7});
        const auto lambda = tie_weights(y);
        const auto rep = solve_dual(d, y, p1, lambda, tight);
        const auto plan = oracle::exact_transport(instance_from(d, y, lambda, p1));
        CHECK(rep.converged);
        CHECK(std::abs(rep.value - plan.value) <= 1e-8);
    }
}

TEST_CASE("two-sink threshold oracle agrees with the flow oracle") {
    const CostSpec sq = CostSpec::squared_euclidean_cost();
    const GridDensity d = bumpy_1d_density(45, 19);
    const auto y = points1d({0.33, 0.66});
    const auto lambda = tie_weights(y);
    const auto inst = instance_from(d, y, lambda, sq);
    const auto plan = oracle::exact_transport(inst);
    CHECK(plan.value ==
          doctest::Approx(oracle::exact_transport_two_sinks(inst)).epsilon(1e-12));
}

TEST_CASE("solve_dual value is a lower bound on feasible plan costs") {
    const CostSpec sq = CostSpec::squared_euclidean_cost();
    const GridDensity d = bumpy_1d_density(32, 41);
    const auto y = points1d({0.2, 0.5, 0.85});
    const auto lambda = tie_weights(y);
    SolverOptions tight;
    tight.mass_tol = 1e-11;
    const auto rep = solve_dual(d, y, sq, lambda, tight);
    const auto inst = instance_from(d, y, lambda, sq);
    const auto plan = oracle::exact_transport(inst);

    // perturb the optimal plan inside the transportation polytope: reroute
    // mass around a cycle (k1,i1) -> (k1,i2) -> (k2,i2) -> (k2,i1)
    const int n = static_cast<int>(inst.site_pos.size());
    const int m = static_cast<int>(inst.atom_pos.size());
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> flow = plan.flow;
        const int k1 = static_cast<int>(rng.uniform() * m);
        const int k2 = static_cast<int>(rng.uniform() * m);
        const int i1 = static_cast<int>(rng.uniform() * n);
        const int i2 = static_cast<int>(rng.uniform() * n);
        if (k1 == k2 || i1 == i2) continue;
        const double delta =
            std::min(flow[static_cast<std::size_t>(k1) * n + i1],
                     flow[static_cast<std::size_t>(k2) * n + i2]) *
            rng.uniform();
        flow[static_cast<std::size_t>(k1) * n + i1] -= delta;
        flow[static_cast<std::size_t>(k1) * n + i2] += delta;
        flow[static_cast<std::size_t>(k2) * n + i2] -= delta;
        flow[static_cast<std::size_t>(k2) * n + i1] += delta;
        double cost_of_plan = 0.0;
        for (int k = 0; k < m; ++k)
            for (int i = 0; i < n; ++i)
                cost_of_plan += flow[static_cast<std::size_t>(k) * n + i] *
                                inst.cost(inst.atom_pos[static_cast<std::size_t>(k)],
                                          inst.site_pos[static_cast<std::size_t>(i)],
                                          inst.dim);
        CHECK(rep.value <= cost_of_plan + 1e-10);
    }
}

TEST_CASE("solve_dual anchors: mean-zero and first-zero describe the same solution") {
    const GridDensity d = bumpy_1d_density(50, 55);
    const auto y = points1d({0.2, 0.6, 0.9});
    const auto lambda = tie_weights(y);
    const CostSpec sq = CostSpec::squared_euclidean_cost();
    const auto mean0 = solve_dual(d, y, sq, lambda, {}, {}, WeightAnchor::mean_zero);
    const auto first0 =
        solve_dual(d, y, sq, lambda, {}, {}, WeightAnchor::first_zero);
    CHECK(first0.weights.w[0] == 0.0);
    double mean = 0.0;
    for (double w : mean0.weights.w) mean += w;
    CHECK(std::abs(mean / 3.0) <= 1e-12);
    CHECK(mean0.value == doctest::Approx(first0.value).epsilon(1e-12));
    const double shift = first0.weights.w[1] - mean0.weights.w[1];
    CHECK(first0.weights.w[2] - mean0.weights.w[2] ==
          doctest::Approx(shift).epsilon(1e-9));
}

TEST_CASE("solve_dual: a far point under a capped cost converges via the split plan") {
    // bounded cost differences: the far point saturates at cost 0.01 against
    // every atom, so whole-cell masses jump straight from ~0.2 to 1 and the
    // ascent alone can never hit 1/2; at the dual vertex the capped atoms are
    // exactly tied and the optimal plan splits them
    const CostSpec capped = CostSpec::custom_cost(
        [](const Point& x, const Point& y, int dim) {
            double s = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double d = x[a] - y[a];
                s += d * d;
            }
            return std::min(s, 0.01);
        });
    const GridDensity d = bumpy_1d_density(60, 3);
    const auto y = points1d({0.5, 1000.0});
    SolverOptions opts;
    opts.mass_tol = 1e-9;
    opts.max_iter = 500;
    const auto rep = solve_dual(d, y, capped, tie_weights(y), opts);
    CHECK(rep.converged);
    CHECK(rep.exact_plan);
    CHECK(rep.cell_masses[0] == doctest::Approx(0.5).epsilon(1e-9));
    const auto plan = oracle::exact_transport(instance_from(d, y, tie_weights(y),
                                                            capped));
    CHECK(rep.value == doctest::Approx(plan.value).epsilon(1e-10));
}

TEST_CASE("non-finite coordinates are rejected") {
    const GridDensity d = build_uniform_box({0.0}, {1.0}, {16});
    PointConfiguration bad;
    bad.dim = 1;
    bad.pts = {{0.5, 0.0}, {std::numeric_limits<double>::quiet_NaN(), 0.0}};
    CHECK_THROWS_AS(voronoi_partition(d, bad), ArgumentError);
    CHECK_THROWS_AS(
        solve_dual(d, bad, CostSpec::squared_euclidean_cost(), tie_weights(bad)),
        ArgumentError);
}

TEST_CASE("solve_dual rejects invalid targets") {
    const GridDensity d = build_uniform_box({0.0}, {1.0}, {16});
    const auto y = points1d({0.5});
    TieWeights bad;
    bad.lambda = {0.4};
    CHECK_THROWS_AS(
        solve_dual(d, y, CostSpec::squared_euclidean_cost(), bad), ArgumentError);
    TieWeights neg;
    neg.lambda = {1.5, -0.5};
    CHECK_THROWS_AS(dual_objective(d, points1d({0.2, 0.8}), {0.0, 0.0},
                                   CostSpec::squared_euclidean_cost(), neg),
                    ArgumentError);
}
