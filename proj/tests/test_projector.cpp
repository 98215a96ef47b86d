// Line-integral projector: closed-form rays, symmetry, adjointness,
// linearity, and slice separability.
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "grrecon/phantom.hpp"
#include "grrecon/projector.hpp"
#include "grrecon/rng.hpp"
#include "grrecon/types.hpp"
#include "test_helpers.hpp"

using namespace grrecon;
using testutil::random_volume;

TEST_CASE("projector: zero volume projects to zero") {
    Grid g(16, 16, 16);
    ForwardModel m = ForwardModel::for_grid(g);
    Sinogram s = forward_project(Volume(g), m);
    for (float v : s.data) CHECK(v == 0.0f);
}

TEST_CASE("projector: axis-aligned ray through a uniform volume integrates its extent") {
    Grid g(16, 16, 16);
    Volume ones(g, 1.0f);
    // Odd detector count so the central bin passes exactly through the grid center.
    ForwardModel m = ForwardModel::for_grid(g, 60, 17, 1.0);
    Sinogram s = forward_project(ones, m);
    const int center_bin = 8;  // (17 - 1) / 2
    CHECK(m.angles[0] == 0.0);
    for (int slice : {0, 7, 15})
        CHECK(s.at(0, center_bin, slice) == doctest::Approx(16.0).epsilon(1e-9));
}

TEST_CASE("projector: centered ball projects identically at perpendicular angles") {
    Grid g(32, 32, 8);
    PhantomSpec spec;
    spec.grid = g;
    spec.shapes.push_back({{15.5, 15.5, 3.5}, {9.0, 9.0, 100.0}, 1.0});
    Volume ball = create_phantom(spec);
    ForwardModel m = ForwardModel::for_grid(g);  // 60 angles: index 30 is a quarter turn
    Sinogram s = forward_project(ball, m);
    float peak = 0.0f;
    for (float v : s.data) peak = std::max(peak, v);
    const int slice = 3;
    for (int d = 0; d < m.n_det; ++d) {
        const double a = s.at(0, d, slice);
        const double b = s.at(30, d, slice);
        CHECK(std::abs(a - b) <= 1e-3 * peak);
    }
}

TEST_CASE("projector: back projection of a zero sinogram is zero") {
    Grid g(16, 16, 16);
    ForwardModel m = ForwardModel::for_grid(g);
    Volume v = back_project(m.empty_sinogram(), m, g);
    for (float x : v.data) CHECK(x == 0.0f);
}

TEST_CASE("projector: forward and back projection are adjoint") {
    Grid g(16, 16, 16);
    ForwardModel m = ForwardModel::for_grid(g);
    for (int trial = 0; trial < 10; ++trial) {
        Volume x = random_volume(g, 100 + trial, -1.0f, 1.0f);
        Sinogram y = m.empty_sinogram();
        std::mt19937_64 rng = make_engine(200 + trial);
        std::uniform_real_distribution<float> u(-1.0f, 1.0f);
        for (float& v : y.data) v = u(rng);

        Sinogram Px = forward_project(x, m);
        Volume Pty = back_project(y, m, g);
        double lhs = 0.0, rhs = 0.0, px_norm = 0.0, y_norm = 0.0;
        for (std::size_t i = 0; i < Px.data.size(); ++i) {
            lhs += static_cast<double>(Px.data[i]) * y.data[i];
            px_norm += static_cast<double>(Px.data[i]) * Px.data[i];
            y_norm += static_cast<double>(y.data[i]) * y.data[i];
        }
        for (std::size_t i = 0; i < Pty.data.size(); ++i)
            rhs += static_cast<double>(x.data[i]) * Pty.data[i];
        CHECK(std::abs(lhs - rhs) <= 1e-5 * std::sqrt(px_norm) * std::sqrt(y_norm));
    }
}

TEST_CASE("projector: single-bin back projection is supported only on that ray") {
    Grid g(16, 16, 4);
    ForwardModel m = ForwardModel::for_grid(g);
    Sinogram y = m.empty_sinogram();
    const int angle = 17, det = 9, slice = 2;
    y.at(angle, det, slice) = 1.0f;
    Volume bp = back_project(y, m, g);

    // support must stay inside the bin's slice
    for (int z = 0; z < 4; ++z)
        for (int yy = 0; yy < 16; ++yy)
            for (int xx = 0; xx < 16; ++xx)
                if (z != slice) CHECK(bp.at(xx, yy, z) == 0.0f);

    // nonzero voxels must have nonzero forward weight into that bin
    for (int yy = 0; yy < 16; ++yy)
        for (int xx = 0; xx < 16; ++xx)
            if (bp.at(xx, yy, slice) != 0.0f) {
                Volume e(g);
                e.at(xx, yy, slice) = 1.0f;
                Sinogram Pe = forward_project(e, m);
                CHECK(Pe.at(angle, det, slice) != 0.0f);
            }
}

TEST_CASE("projector: forward projection is linear") {
    Grid g(12, 12, 6);
    ForwardModel m = ForwardModel::for_grid(g, 30);
    Volume x = random_volume(g, 301, 0.0f, 1.0f);
    Volume z = random_volume(g, 302, 0.0f, 1.0f);
    Volume combo(g);
    for (std::size_t i = 0; i < combo.data.size(); ++i)
        combo.data[i] = 2.0f * x.data[i] + 3.0f * z.data[i];
    Sinogram px = forward_project(x, m);
    Sinogram pz = forward_project(z, m);
    Sinogram pc = forward_project(combo, m);
    for (std::size_t i = 0; i < pc.data.size(); ++i)
        CHECK(pc.data[i] ==
              doctest::Approx(2.0 * px.data[i] + 3.0 * pz.data[i]).epsilon(1e-5));
}

TEST_CASE("projector: projection separates over axial slices") {
    Grid g(10, 10, 5);
    ForwardModel m = ForwardModel::for_grid(g, 20);
    Volume full = random_volume(g, 401, 0.0f, 1.0f);
    Sinogram sf = forward_project(full, m);
    for (int z = 0; z < g.dims[2]; ++z) {
        Volume only(g);
        for (int yy = 0; yy < g.dims[1]; ++yy)
            for (int xx = 0; xx < g.dims[0]; ++xx) only.at(xx, yy, z) = full.at(xx, yy, z);
        Sinogram ss = forward_project(only, m);
        for (int a = 0; a < m.n_angles; ++a)
            for (int d = 0; d < m.n_det; ++d) {
                CHECK(ss.at(a, d, z) == sf.at(a, d, z));
                for (int oz = 0; oz < g.dims[2]; ++oz)
                    if (oz != z) CHECK(ss.at(a, d, oz) == 0.0f);
            }
    }
}

TEST_CASE("projector: geometry mismatches are rejected") {
    Grid g(8, 8, 8);
    ForwardModel m = ForwardModel::for_grid(g);
    Volume wrong(Grid(8, 8, 9));
    CHECK_THROWS(forward_project(wrong, m));
    Sinogram bad = m.empty_sinogram();
    bad.n_slices = 7;
    bad.data.resize(static_cast<std::size_t>(bad.n_angles) * bad.n_det * 7);
    CHECK_THROWS(back_project(bad, m, g));
}

TEST_CASE("projector: repeated runs are bit-identical") {
    Grid g(16, 16, 8);
    ForwardModel m = ForwardModel::for_grid(g);
    Volume x = random_volume(g, 77, 0.0f, 2.0f);
    Sinogram a = forward_project(x, m);
    Sinogram b = forward_project(x, m);
    CHECK(a.data == b.data);
    Volume ba = back_project(a, m, g);
    Volume bb = back_project(a, m, g);
    CHECK(ba.data == bb.data);
}
