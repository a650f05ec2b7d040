#pragma once

#include "mslin/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace mslin {

/// Seeded generator with platform-independent conversions (the standard
/// distributions are implementation-defined, which would break byte-stable reports).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi].
    std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {
        return lo + static_cast<std::uint64_t>(uniform() * static_cast<double>(hi - lo + 1));
    }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform point in the closed Euclidean ball of the given radius in ℝ^d.
    Vector ball(Eigen::Index d, double radius) {
        Vector g(d);
        for (Eigen::Index i = 0; i < d; ++i) g(i) = normal();
        double n = g.norm();
        if (n == 0.0) {
            g.setZero();
            g(0) = 1.0;
            n = 1.0;
        }
        const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(d));
        return g * (r / n);
    }

    /// Uniform direction on the unit sphere.
    Vector direction(Eigen::Index d) {
        Vector g(d);
        for (Eigen::Index i = 0; i < d; ++i) g(i) = normal();
        const double n = g.norm();
        if (n == 0.0) return Vector::Unit(d, 0);
        return g / n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mslin
