#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sdot/divergences.hpp"
#include "sdot/io.hpp"
#include "sdot/lloyd.hpp"

namespace py = pybind11;
using namespace sdot;

namespace {

PointConfiguration points_from_list(const std::vector<std::vector<double>>& pts) {
    PointConfiguration y;
    if (pts.empty()) throw ArgumentError("points list is empty");
    y.dim = static_cast<int>(pts.front().size());
    if (y.dim < 1 || y.dim > 2)
        throw ArgumentError("points must be 1-D or 2-D");
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != y.dim)
            throw ArgumentError("inconsistent point dimensions");
        y.pts.push_back({p[0], y.dim > 1 ? p[1] : 0.0});
    }
    return y;
}

std::vector<std::vector<double>> points_to_list(const PointConfiguration& y) {
    std::vector<std::vector<double>> out;
    for (const auto& p : y.pts) {
        std::vector<double> row{p[0]};
        if (y.dim > 1) row.push_back(p[1]);
        out.push_back(std::move(row));
    }
    return out;
}

DiscreteCloud cloud_from_lists(const std::vector<std::vector<double>>& pts,
                               const std::vector<double>& weights) {
    DiscreteCloud c;
    if (pts.empty()) throw ArgumentError("cloud is empty");
    c.dim = static_cast<int>(pts.front().size());
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != c.dim)
            throw ArgumentError("inconsistent cloud dimensions");
        for (double v : p) c.coords.push_back(v);
    }
    c.weights = weights;
    return c;
}

CostSpec cost_from_name(const std::string& name, double p) {
    if (name == "squared_euclidean") return CostSpec::squared_euclidean_cost();
    if (name == "p_power") return CostSpec::p_power_cost(p);
    throw ArgumentError("unknown cost kind: " + name);
}

LloydOptions lloyd_options(int max_iter, double step_tol, double mass_tol,
                           std::uint64_t seed) {
    LloydOptions o;
    o.max_iter = max_iter;
    o.step_tol = step_tol;
    o.seed = seed;
    o.inner.mass_tol = mass_tol;
    return o;
}

py::dict trace_to_dict(const SolverTrace& t) {
    py::list rows;
    for (const auto& r : t.rows) {
        py::dict row;
        row["n"] = r.n;
        row["loss"] = r.loss;
        row["gradNorm"] = r.grad_norm;
        row["stepNorm"] = r.step_norm;
        row["minCellMass"] = r.min_cell_mass;
        row["descentLHS"] = r.descent_lhs;
        row["descentRHS"] = r.descent_rhs;
        row["innerIterations"] = r.inner_iterations;
        rows.append(row);
    }
    py::dict out;
    out["rows"] = rows;
    out["converged"] = t.converged;
    out["stopReason"] = t.stop_reason;
    return out;
}

}  // namespace

PYBIND11_MODULE(_sdquant, m) {
    m.doc() = "semi-discrete optimal transport quantization";

    py::register_exception<DegenerateMeasureError>(m, "DegenerateMeasureError");
    py::register_exception<DiagonalError>(m, "DiagonalError");

    py::class_<GridDensity>(m, "GridDensity")
        .def_readonly("dim", &GridDensity::dim)
        .def_readonly("shape", &GridDensity::shape)
        .def_readonly("origin", &GridDensity::origin)
        .def_readonly("spacing", &GridDensity::spacing)
        .def_readonly("values", &GridDensity::values)
        .def_readonly("cell_volume", &GridDensity::cell_volume)
        .def("total_mass", &GridDensity::total_mass)
        .def("cell_center",
             [](const GridDensity& d, std::size_t k) {
                 const Point c = d.cell_center(k);
                 return d.dim > 1 ? std::vector<double>{c[0], c[1]}
                                  : std::vector<double>{c[0]};
             })
        .def("diameter", &GridDensity::diameter);

    m.def("load_pgm", &load_pgm, py::arg("path"));
    m.def("build_uniform_box", &build_uniform_box, py::arg("lo"), py::arg("hi"),
          py::arg("resolution"));
    m.def(
        "build_disk_mixture",
        [](const std::vector<double>& center, double radius,
           const std::vector<py::dict>& components,
           const std::vector<int>& resolution) {
            std::vector<MixtureComponent> comps;
            for (const auto& c : components) {
                MixtureComponent mc;
                const auto mean = c["mean"].cast<std::vector<double>>();
                mc.mean = {mean.at(0), mean.at(1)};
                const auto cov = c["cov"].cast<std::vector<double>>();
                mc.cov = {cov.at(0), cov.at(1), cov.at(2)};
                if (c.contains("weight")) mc.weight = c["weight"].cast<double>();
                comps.push_back(mc);
            }
            return build_disk_mixture({center.at(0), center.at(1)}, radius, comps,
                                      {resolution.at(0), resolution.at(1)});
        },
        py::arg("center"), py::arg("radius"), py::arg("components"),
        py::arg("resolution"));

    m.def(
        "region_stats",
        [](const GridDensity& d, const std::function<bool(std::size_t)>& mask) {
            const RegionStats s = region_stats(d, mask);
            py::dict out;
            out["mass"] = s.mass;
            out["barycenter"] = d.dim > 1
                                    ? std::vector<double>{s.barycenter[0],
                                                          s.barycenter[1]}
                                    : std::vector<double>{s.barycenter[0]};
            out["has_barycenter"] = s.has_barycenter;
            return out;
        },
        py::arg("density"), py::arg("mask"));

    m.def(
        "tie_weights",
        [](const std::vector<std::vector<double>>& pts) {
            return tie_weights(points_from_list(pts)).lambda;
        },
        py::arg("points"));

    m.def(
        "voronoi_partition",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts,
           bool merge_duplicates) {
            const auto part =
                voronoi_partition(d, points_from_list(pts), merge_duplicates);
            py::dict out;
            out["labels"] = part.labels;
            py::list regions;
            for (const auto& r : part.regions) {
                py::dict reg;
                reg["mass"] = r.mass;
                reg["barycenter"] = std::vector<double>{r.barycenter[0],
                                                        r.barycenter[1]};
                reg["second_moment"] = r.second_moment;
                regions.append(reg);
            }
            out["regions"] = regions;
            return out;
        },
        py::arg("density"), py::arg("points"), py::arg("merge_duplicates") = false);

    m.def(
        "solve_dual",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts,
           double mass_tol, int max_iter, const std::string& cost, double p,
           const std::string& anchor) {
            const PointConfiguration y = points_from_list(pts);
            SolverOptions opts;
            opts.mass_tol = mass_tol;
            opts.max_iter = max_iter;
            const auto rep = solve_dual(
                d, y, cost_from_name(cost, p), tie_weights(y), opts, {},
                anchor == "first_zero" ? WeightAnchor::first_zero
                                       : WeightAnchor::mean_zero);
            py::dict out;
            out["value"] = rep.value;
            out["weights"] = rep.weights.w;
            out["converged"] = rep.converged;
            out["iterations"] = rep.iterations;
            out["cell_masses"] = rep.cell_masses;
            out["mass_residuals"] = rep.mass_residuals;
            out["exact_plan"] = rep.exact_plan;
            return out;
        },
        py::arg("density"), py::arg("points"), py::arg("mass_tol") = 0.0,
        py::arg("max_iter") = 10000, py::arg("cost") = "squared_euclidean",
        py::arg("p") = 2.0, py::arg("anchor") = "mean_zero");

    m.def(
        "optimal_energy",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts) {
            return optimal_energy(d, points_from_list(pts));
        },
        py::arg("density"), py::arg("points"));

    m.def(
        "uniform_energy",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts,
           double mass_tol) {
            SolverOptions inner;
            inner.mass_tol = mass_tol;
            const auto [value, w] =
                uniform_energy(d, points_from_list(pts), inner);
            return py::make_tuple(value, w.w);
        },
        py::arg("density"), py::arg("points"), py::arg("mass_tol") = 0.0);

    m.def(
        "lloyd_optimal",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts,
           int max_iter, double step_tol, std::uint64_t seed) {
            const auto res = lloyd_optimal(d, points_from_list(pts),
                                           lloyd_options(max_iter, step_tol, 0.0,
                                                         seed));
            py::dict out;
            out["points"] = points_to_list(res.points);
            out["trace"] = trace_to_dict(res.trace);
            return out;
        },
        py::arg("density"), py::arg("points"), py::arg("max_iter") = 10000,
        py::arg("step_tol") = -1.0, py::arg("seed") = 0);

    m.def(
        "lloyd_uniform",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts,
           int max_iter, double step_tol, double mass_tol, std::uint64_t seed) {
            const auto res =
                lloyd_uniform(d, points_from_list(pts),
                              lloyd_options(max_iter, step_tol, mass_tol, seed));
            py::dict out;
            out["points"] = points_to_list(res.points);
            out["weights"] = res.weights.w;
            out["trace"] = trace_to_dict(res.trace);
            return out;
        },
        py::arg("density"), py::arg("points"), py::arg("max_iter") = 10000,
        py::arg("step_tol") = -1.0, py::arg("mass_tol") = 0.0, py::arg("seed") = 0);

    m.def(
        "sample_points",
        [](const GridDensity& d, int n, std::uint64_t seed) {
            return points_to_list(sample_points(d, n, seed));
        },
        py::arg("density"), py::arg("n"), py::arg("seed") = 0);

    m.def("w2_1d_discrete", &w2_1d_discrete, py::arg("positions_a"),
          py::arg("weights_a"), py::arg("positions_b"), py::arg("weights_b"));

    m.def(
        "sliced_w2_discrete",
        [](const std::vector<std::vector<double>>& pts_a,
           const std::vector<double>& w_a,
           const std::vector<std::vector<double>>& pts_b,
           const std::vector<double>& w_b, int num_directions,
           std::uint64_t seed) {
            SlicedConfig cfg;
            cfg.num_directions = num_directions;
            cfg.seed = seed;
            return sliced_w2_discrete(cloud_from_lists(pts_a, w_a),
                                      cloud_from_lists(pts_b, w_b), cfg);
        },
        py::arg("points_a"), py::arg("weights_a"), py::arg("points_b"),
        py::arg("weights_b"), py::arg("num_directions") = 64, py::arg("seed") = 0);

    m.def(
        "max_sliced_semidiscrete",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts,
           int num_starts, std::uint64_t seed) {
            MaxSlicedOptions opts;
            opts.num_starts = num_starts;
            opts.seed = seed;
            const auto res =
                max_sliced_semidiscrete(d, points_from_list(pts), opts);
            py::dict out;
            out["value"] = res.value;
            out["direction"] = res.direction;
            out["evaluations"] = res.evaluations;
            return out;
        },
        py::arg("density"), py::arg("points"), py::arg("num_starts") = 16,
        py::arg("seed") = 0);

    m.def(
        "entropic_semidiscrete",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts,
           double epsilon, int max_iter, double grad_tol,
           const std::string& cost, double p) {
            EntropicConfig cfg;
            cfg.epsilon = epsilon;
            cfg.max_iter = max_iter;
            cfg.grad_tol = grad_tol;
            const auto rep = entropic_semidiscrete(d, points_from_list(pts),
                                                   cost_from_name(cost, p), cfg);
            py::dict out;
            out["value"] = rep.value;
            out["weights"] = rep.weights.w;
            out["soft_masses"] = rep.soft_masses;
            out["converged"] = rep.converged;
            out["iterations"] = rep.iterations;
            out["hard_min_fallback"] = rep.hard_min_fallback;
            out["potential_bound_exceeded"] = rep.potential_bound_exceeded;
            return out;
        },
        py::arg("density"), py::arg("points"), py::arg("epsilon"),
        py::arg("max_iter") = 20000, py::arg("grad_tol") = 1e-9,
        py::arg("cost") = "squared_euclidean", py::arg("p") = 2.0);

    m.def(
        "render_svg",
        [](const GridDensity& d, const std::vector<std::vector<double>>& pts,
           const std::string& path) {
            const PointConfiguration y = points_from_list(pts);
            const auto part = voronoi_partition(d, y, true);
            std::vector<double> masses;
            for (const auto& r : part.regions) masses.push_back(r.mass);
            render_svg(d, part, y, masses, path);
        },
        py::arg("density"), py::arg("points"), py::arg("path"));
}
