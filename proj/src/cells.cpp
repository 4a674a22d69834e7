#include "sdot/cells.hpp"

#include <cmath>
#include <limits>

#include "sdot/errors.hpp"

namespace sdot {

void require_finite(const PointConfiguration& y, const char* who) {
    for (const auto& p : y.pts)
        for (int a = 0; a < y.dim; ++a)
            if (!std::isfinite(p[a]))
                throw ArgumentError(std::string(who) +
                                    ": point coordinates must be finite");
}

double CellPartition::min_mass() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : regions)
        if (r.mass < m) m = r.mass;
    return regions.empty() ? 0.0 : m;
}

namespace {

// Shared assignment + stats pass. score(k, i) is minimized over active i;
// lowest index wins ties (strict improvement required to switch).
template <typename Score>
CellPartition assign_cells(const GridDensity& d, const PointConfiguration& y,
                           const std::vector<char>& active, Score score) {
    const int n = y.size();
    CellPartition part;
    part.labels.assign(d.cell_count(), kUnassigned);
    part.regions.assign(static_cast<std::size_t>(n), {});

    std::vector<long double> mass(static_cast<std::size_t>(n), 0.0L);
    std::vector<long double> bx(static_cast<std::size_t>(n), 0.0L);
    std::vector<long double> by(static_cast<std::size_t>(n), 0.0L);
    std::vector<long double> m2(static_cast<std::size_t>(n), 0.0L);

    const std::size_t cells = d.cell_count();
    for (std::size_t k = 0; k < cells; ++k) {
        const Point x = d.cell_center(k);
        int best = -1;
        double best_val = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            const double v = score(x, i);
            if (v < best_val) {
                best_val = v;
                best = i;
            }
        }
        part.labels[k] = best;
        const long double m = static_cast<long double>(d.cell_mass(k));
        if (m == 0.0L || best < 0) continue;
        const std::size_t b = static_cast<std::size_t>(best);
        mass[b] += m;
        bx[b] += m * x[0];
        by[b] += m * x[1];
        double d2 = 0.0;
        for (int a = 0; a < d.dim; ++a) {
            const double diff = x[a] - y.pts[b][a];
            d2 += diff * diff;
        }
        m2[b] += m * d2;
    }

    for (int i = 0; i < n; ++i) {
        const std::size_t b = static_cast<std::size_t>(i);
        auto& r = part.regions[b];
        r.mass = static_cast<double>(mass[b]);
        r.second_moment = static_cast<double>(m2[b]);
        if (mass[b] > 0.0L) {
            r.barycenter = {static_cast<double>(bx[b] / mass[b]),
                            static_cast<double>(by[b] / mass[b])};
            r.has_barycenter = true;
        }
    }
    return part;
}

}  // namespace

CellPartition voronoi_partition(const GridDensity& d, const PointConfiguration& y,
                                bool merge_duplicates) {
    if (y.size() < 1) throw ArgumentError("voronoi_partition: empty configuration");
    require_finite(y, "voronoi_partition");
    std::vector<char> active(static_cast<std::size_t>(y.size()), 1);
    if (y.on_diagonal()) {
        if (!merge_duplicates)
            throw DiagonalError("voronoi_partition: coincident points (pass "
                                "merge_duplicates to merge them)");
        const TieWeights t = tie_weights(y);
        for (std::size_t i = 0; i < t.lambda.size(); ++i)
            active[i] = t.lambda[i] > 0.0 ? 1 : 0;
    }
    return assign_cells(d, y, active, [&](const Point& x, int i) {
        double s = 0.0;
        for (int a = 0; a < d.dim; ++a) {
            const double diff = x[a] - y.pts[static_cast<std::size_t>(i)][a];
            s += diff * diff;
        }
        return s;
    });
}

CellPartition power_partition(const GridDensity& d, const PointConfiguration& y,
                              const std::vector<double>& w, const CostSpec& cost,
                              const TieWeights& lambda) {
    const int n = y.size();
    if (n < 1) throw ArgumentError("power_partition: empty configuration");
    require_finite(y, "power_partition");
    if (w.size() != static_cast<std::size_t>(n) ||
        lambda.lambda.size() != static_cast<std::size_t>(n))
        throw ArgumentError("power_partition: w and lambda must have length N");
    std::vector<char> active(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        active[static_cast<std::size_t>(i)] = lambda.lambda[static_cast<std::size_t>(i)] > 0.0;
    return assign_cells(d, y, active, [&](const Point& x, int i) {
        return cost(x, y.pts[static_cast<std::size_t>(i)], d.dim) -
               w[static_cast<std::size_t>(i)];
    });
}

CellPartition power_partition(const GridDensity& d, const PointConfiguration& y,
                              const std::vector<double>& w, const CostSpec& cost) {
    return power_partition(d, y, w, cost, tie_weights(y));
}

}  // namespace sdot
