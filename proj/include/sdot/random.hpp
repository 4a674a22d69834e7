#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sdot {

// Deterministic random source. The standard distributions are
// implementation-defined, so the double extraction is done by hand to keep
// equal seeds byte-reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform direction on the unit sphere of R^dim (normalized Gaussian).
    std::vector<double> unit_vector(int dim) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& c : v) {
                c = gaussian();
                norm2 += c * c;
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& c : v) c *= inv;
        return v;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sdot
