// Shared helpers for the unit suites: seeded random fields/clouds, relative
// comparison with an absolute floor, and simple statistics.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "grrecon/gaussian_cloud.hpp"
#include "grrecon/rng.hpp"
#include "grrecon/types.hpp"

namespace testutil {

inline bool rel_close(double a, double b, double rel, double abs_floor = 1e-12) {
    const double diff = std::abs(a - b);
    return diff <= abs_floor + rel * std::max(std::abs(a), std::abs(b));
}

inline grrecon::Volume random_volume(const grrecon::Grid& grid, std::uint64_t seed,
                                     float lo = 0.0f, float hi = 1.0f) {
    std::mt19937_64 rng = grrecon::make_engine(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    grrecon::Volume v(grid);
    for (float& x : v.data) x = u(rng);
    return v;
}

inline std::vector<double> random_field(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                        double hi = 1.0) {
    std::mt19937_64 rng = grrecon::make_engine(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> f(n);
    for (double& x : f) x = u(rng);
    return f;
}

// Random cloud with fractional center offsets kept away from voxel boundaries
// so finite-difference probes do not flip the integer anchor.
inline grrecon::GaussianCloud random_cloud(std::size_t n, const grrecon::Grid& grid,
                                           std::uint64_t seed, double sigma_lo = 0.9,
                                           double sigma_hi = 1.8) {
    std::mt19937_64 rng = grrecon::make_engine(seed);
    std::uniform_real_distribution<double> frac(0.25, 0.75);
    std::uniform_real_distribution<double> us(sigma_lo, sigma_hi);
    std::uniform_real_distribution<double> ui(0.5, 2.0);
    grrecon::GaussianCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 3> mu;
        for (int a = 0; a < 3; ++a) {
            std::uniform_int_distribution<int> ucell(2, grid.dims[a] - 3);
            mu[a] = ucell(rng) + frac(rng);
        }
        cloud.push_back(mu, us(rng), ui(rng));
    }
    return cloud;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return v.size() > 1 ? s / static_cast<double>(v.size() - 1) : 0.0;
}

inline double mse_between(const grrecon::Volume& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}

}  // namespace testutil
