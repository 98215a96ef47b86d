// gaussian_cloud.hpp - discretized isotropic 3D Gaussian representation:
// parameter storage, center decomposition, and the decomposed squared
// Mahalanobis distance over the local support box.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "grrecon/types.hpp"

namespace grrecon {

// Set of isotropic Gaussians in continuous voxel-space coordinates. Each has a
// center mu, a standard deviation sigma (voxel units, stored in log-space so
// sigma stays > 0 under optimization), and a nonnegative intensity. All share
// an odd support box side K.
struct GaussianCloud {
    int support_k = 11;
    std::vector<std::array<double, 3>> centers;
    std::vector<double> log_sigmas;
    std::vector<double> intensities;

    std::size_t size() const { return centers.size(); }

    double sigma(std::size_t i) const;
    void set_sigma(std::size_t i, double sigma);

    void push_back(const std::array<double, 3>& mu, double sigma, double intensity);
    void erase(std::size_t i);

    void validate() const;
};

// Support box of one Gaussian: integer anchor floor(mu), fractional offset
// delta = mu - floor(mu) in [0,1)^3, and the implicit K^3 offsets spanning
// [-(K-1)/2, (K-1)/2]^3 around the anchor.
struct LocalBox {
    int k = 11;
    std::array<int, 3> anchor{0, 0, 0};
    std::array<double, 3> delta{0.0, 0.0, 0.0};
};

// Per-Gaussian gradients of a scalar loss with respect to (mu, sigma, I).
struct ParamGrads {
    std::vector<std::array<double, 3>> mu;
    std::vector<double> sigma;
    std::vector<double> intensity;

    explicit ParamGrads(std::size_t n = 0) : mu(n, {0.0, 0.0, 0.0}), sigma(n, 0.0), intensity(n, 0.0) {}
    std::size_t size() const { return mu.size(); }
};

// Splits a continuous center into floored integer coordinates and a fractional
// offset; floor + delta reconstructs mu bit-exactly and delta is in [0,1)^3.
// Throws on non-finite input.
void decompose_center(const std::array<double, 3>& mu, std::array<int, 3>& floor_out,
                      std::array<double, 3>& delta_out);

LocalBox make_local_box(const std::array<double, 3>& mu, int support_k);

// Squared Mahalanobis distance for every offset of the box, computed through
// the four precomputed terms S_BB - S_Bd - S_dB + S_dd with C^-1 = I/sigma^2.
// Output is k^3 values, x-fastest over box offsets. Throws for sigma <= 0.
std::vector<double> mahalanobis_sq(const LocalBox& box, double sigma);

}  // namespace grrecon
