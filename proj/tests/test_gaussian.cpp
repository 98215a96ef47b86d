// Gaussian-set representation: center decomposition, decomposed squared
// Mahalanobis distance, splatting, and parameter gradients.
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"

#include "grrecon/gaussian_cloud.hpp"
#include "grrecon/rasterizer.hpp"
#include "grrecon/rng.hpp"
#include "grrecon/types.hpp"
#include "test_helpers.hpp"

using namespace grrecon;
using testutil::random_cloud;
using testutil::random_field;
using testutil::rel_close;

namespace {

double weighted_sum(const std::vector<double>& field, const std::vector<double>& upstream) {
    double s = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) s += field[i] * upstream[i];
    return s;
}

}  // namespace

TEST_CASE("decompose_center: integer and fractional cases") {
    std::array<int, 3> fl;
    std::array<double, 3> de;
    decompose_center({3.0, 5.0, 7.0}, fl, de);
    CHECK(fl == std::array<int, 3>{3, 5, 7});
    CHECK(de == std::array<double, 3>{0.0, 0.0, 0.0});

    decompose_center({3.5, -0.25, 7.0}, fl, de);
    CHECK(fl == std::array<int, 3>{3, -1, 7});
    CHECK(de[0] == 0.5);
    CHECK(de[1] == 0.75);
    CHECK(de[2] == 0.0);
}

TEST_CASE("decompose_center: floor plus offset reconstructs the input bit-exactly") {
    std::mt19937_64 rng = make_engine(5);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 200; ++i) {
        const std::array<double, 3> mu = {u(rng), u(rng), u(rng)};
        std::array<int, 3> fl;
        std::array<double, 3> de;
        decompose_center(mu, fl, de);
        for (int a = 0; a < 3; ++a) {
            CHECK(fl[a] + de[a] == mu[a]);
            CHECK(de[a] >= 0.0);
            CHECK(de[a] < 1.0);
        }
    }
    std::array<int, 3> fl;
    std::array<double, 3> de;
    CHECK_THROWS(decompose_center({std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0}, fl, de));
}

TEST_CASE("mahalanobis: zero offset with zero delta is exactly zero") {
    LocalBox box = make_local_box({4.0, 4.0, 4.0}, 5);
    std::vector<double> d2 = mahalanobis_sq(box, 1.3);
    const int half = 2;
    const std::size_t center = static_cast<std::size_t>(half) + 5 * (half + 5 * half);
    CHECK(d2[center] == 0.0);
}

TEST_CASE("mahalanobis: unit-sigma half-offset case") {
    LocalBox box = make_local_box({4.5, 4.0, 4.0}, 5);
    std::vector<double> d2 = mahalanobis_sq(box, 1.0);
    const int half = 2;
    // offset (1,0,0) relative to the anchor: (1 - 0.5)^2 = 0.25
    const std::size_t idx = static_cast<std::size_t>(half + 1) + 5 * (half + 5 * half);
    CHECK(d2[idx] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("mahalanobis: decomposed form matches the direct quadratic form") {
    std::mt19937_64 rng = make_engine(6);
    std::uniform_real_distribution<double> uf(0.0, 1.0);
    std::uniform_real_distribution<double> us(0.3, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = (trial % 2 == 0) ? 11 : 5;
        const std::array<double, 3> mu = {10.0 + uf(rng), 10.0 + uf(rng), 10.0 + uf(rng)};
        const double sigma = us(rng);
        LocalBox box = make_local_box(mu, k);
        std::vector<double> d2 = mahalanobis_sq(box, sigma);
        const int half = k / 2;
        std::size_t idx = 0;
        for (int bz = -half; bz <= half; ++bz)
            for (int by = -half; by <= half; ++by)
                for (int bx = -half; bx <= half; ++bx, ++idx) {
                    const double dx = bx - box.delta[0];
                    const double dy = by - box.delta[1];
                    const double dz = bz - box.delta[2];
                    const double direct = (dx * dx + dy * dy + dz * dz) / (sigma * sigma);
                    CHECK(rel_close(d2[idx], direct, 1e-6));
                }
    }
    CHECK_THROWS(mahalanobis_sq(make_local_box({0.0, 0.0, 0.0}, 5), 0.0));
}

TEST_CASE("rasterize: one Gaussian at an integer voxel puts its intensity there") {
    Grid g(16, 16, 16);
    GaussianCloud c;
    c.push_back({8.0, 8.0, 8.0}, 1.0, 2.0);
    Volume v = rasterize(c, g);
    CHECK(v.at(8, 8, 8) == doctest::Approx(2.0).epsilon(1e-7));
    std::vector<double> dense = rasterize_dense(c, g);
    CHECK(dense[g.index(8, 8, 8)] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("rasterize: half-voxel shift scales the anchor voxel by exp(-1/8)") {
    Grid g(16, 16, 16);
    GaussianCloud c;
    c.push_back({8.5, 8.0, 8.0}, 1.0, 2.0);
    std::vector<double> dense = rasterize_dense(c, g);
    CHECK(dense[g.index(8, 8, 8)] == doctest::Approx(2.0 * std::exp(-0.125)).epsilon(1e-12));
}

TEST_CASE("rasterize: additive over cloud partitions") {
    Grid g(16, 16, 16);
    GaussianCloud a = random_cloud(3, g, 41);
    GaussianCloud b = random_cloud(4, g, 42);
    GaussianCloud both = a;
    for (std::size_t i = 0; i < b.size(); ++i)
        both.push_back(b.centers[i], b.sigma(i), b.intensities[i]);
    std::vector<double> fa = rasterize_dense(a, g);
    std::vector<double> fb = rasterize_dense(b, g);
    std::vector<double> fboth = rasterize_dense(both, g);
    for (std::size_t i = 0; i < fboth.size(); ++i)
        CHECK(fboth[i] == doctest::Approx(fa[i] + fb[i]).epsilon(1e-12));
}

TEST_CASE("rasterize: integer translation shifts the footprint bit-exactly") {
    Grid g(20, 20, 20);
    // dyadic fractions keep the fractional parts bit-identical after the
    // shift, so the local exponent pattern must reproduce exactly
    GaussianCloud c;
    c.support_k = 7;
    c.push_back({6.25, 7.5, 8.125}, 1.2, 1.5);
    GaussianCloud shifted;
    shifted.support_k = 7;
    shifted.push_back({8.25, 9.5, 10.125}, 1.2, 1.5);
    std::vector<double> f0 = rasterize_dense(c, g);
    std::vector<double> f1 = rasterize_dense(shifted, g);
    for (int z = 4; z < 13; ++z)
        for (int y = 4; y < 12; ++y)
            for (int x = 2; x < 11; ++x)
                CHECK(f0[g.index(x, y, z)] == f1[g.index(x + 2, y + 2, z + 2)]);
}

TEST_CASE("rasterize: out-of-grid Gaussians contribute only their in-grid portion") {
    Grid g(8, 8, 8);
    GaussianCloud c;
    c.push_back({-100.0, 4.0, 4.0}, 1.0, 5.0);  // fully outside
    std::vector<double> f = rasterize_dense(c, g);
    for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("rasterize: deterministic mode is bit-reproducible") {
    Grid g(24, 24, 24);
    GaussianCloud c = random_cloud(50, g, 43);
    std::vector<double> a = rasterize_dense(c, g, true);
    std::vector<double> b = rasterize_dense(c, g, true);
    CHECK(a == b);
    // the concurrent path must agree with the serial one to rounding
    std::vector<double> nc = rasterize_dense(c, g, false);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(nc[i] == doctest::Approx(a[i]).epsilon(1e-10));
}

TEST_CASE("rasterize_backward: zero upstream gives zero gradients") {
    Grid g(16, 16, 16);
    GaussianCloud c = random_cloud(4, g, 44);
    std::vector<double> upstream(g.voxel_count(), 0.0);
    ParamGrads grads = rasterize_backward(c, g, upstream.data());
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(grads.intensity[i] == 0.0);
        CHECK(grads.sigma[i] == 0.0);
        for (int a = 0; a < 3; ++a) CHECK(grads.mu[i][a] == 0.0);
    }
}

TEST_CASE("rasterize_backward: point upstream at the mode isolates the intensity gradient") {
    Grid g(16, 16, 16);
    GaussianCloud c;
    c.push_back({8.0, 8.0, 8.0}, 1.0, 2.0);
    std::vector<double> upstream(g.voxel_count(), 0.0);
    upstream[g.index(8, 8, 8)] = 1.0;
    ParamGrads grads = rasterize_backward(c, g, upstream.data());
    CHECK(grads.intensity[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(grads.sigma[0] == doctest::Approx(0.0));
    for (int a = 0; a < 3; ++a) CHECK(grads.mu[0][a] == doctest::Approx(0.0));
}

TEST_CASE("rasterize_backward: gradients match central finite differences") {
    Grid g(16, 16, 16);
    GaussianCloud cloud = random_cloud(5, g, 45);
    std::vector<double> upstream = random_field(g.voxel_count(), 46, -1.0, 1.0);

    ParamGrads grads = rasterize_backward(cloud, g, upstream.data());
    const double h = 1e-3;
    auto loss_of = [&](const GaussianCloud& c) {
        return weighted_sum(rasterize_dense(c, g), upstream);
    };

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            GaussianCloud plus = cloud, minus = cloud;
            plus.centers[i][a] += h;
            minus.centers[i][a] -= h;
            const double fd = (loss_of(plus) - loss_of(minus)) / (2.0 * h);
            CHECK(rel_close(grads.mu[i][a], fd, 1e-4, 1e-9));
        }
        {
            GaussianCloud plus = cloud, minus = cloud;
            plus.set_sigma(i, cloud.sigma(i) + h);
            minus.set_sigma(i, cloud.sigma(i) - h);
            const double fd = (loss_of(plus) - loss_of(minus)) / (2.0 * h);
            CHECK(rel_close(grads.sigma[i], fd, 1e-4, 1e-9));
        }
        {
            GaussianCloud plus = cloud, minus = cloud;
            plus.intensities[i] += h;
            minus.intensities[i] -= h;
            const double fd = (loss_of(plus) - loss_of(minus)) / (2.0 * h);
            CHECK(rel_close(grads.intensity[i], fd, 1e-4, 1e-9));
        }
    }
}

TEST_CASE("gaussian set: validation rejects bad parameters") {
    GaussianCloud c;
    c.push_back({0.0, 0.0, 0.0}, 1.0, 1.0);
    c.support_k = 4;  // even
    CHECK_THROWS(c.validate());
    c.support_k = 11;
    c.intensities[0] = -1.0;
    CHECK_THROWS(c.validate());
    c.intensities[0] = 1.0;
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS(c.set_sigma(0, -2.0));
}
