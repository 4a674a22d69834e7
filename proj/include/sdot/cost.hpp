#pragma once

#include <cmath>
#include <functional>

#include "sdot/density.hpp"

namespace sdot {

enum class CostKind { squared_euclidean, p_power, custom };

/// Nonnegative transport cost c(x, y). Distances are always formed from the
/// coordinate differences so that translating both arguments is exact.
struct CostSpec {
    CostKind kind = CostKind::squared_euclidean;
    double p = 2.0;  // exponent for p_power
    std::function<double(const Point&, const Point&, int dim)> evaluator;

    static CostSpec squared_euclidean_cost() { return CostSpec{}; }

    static CostSpec p_power_cost(double exponent) {
        CostSpec c;
        c.kind = CostKind::p_power;
        c.p = exponent;
        return c;
    }

    static CostSpec custom_cost(
        std::function<double(const Point&, const Point&, int)> fn) {
        CostSpec c;
        c.kind = CostKind::custom;
        c.evaluator = std::move(fn);
        return c;
    }

    double operator()(const Point& x, const Point& y, int dim) const {
        switch (kind) {
            case CostKind::squared_euclidean: {
                double s = 0.0;
                for (int a = 0; a < dim; ++a) {
                    const double d = x[a] - y[a];
                    s += d * d;
                }
                return s;
            }
            case CostKind::p_power: {
                double s = 0.0;
                for (int a = 0; a < dim; ++a) {
                    const double d = x[a] - y[a];
                    s += d * d;
                }
                return std::pow(std::sqrt(s), p);
            }
            case CostKind::custom:
                return evaluator(x, y, dim);
        }
        return 0.0;
    }
};

}  // namespace sdot
