// losses.hpp - sinogram-domain data fidelity and image-domain smoothness
// terms, each returning the scalar value together with its analytic gradient.
#pragma once

#include <cstddef>
#include <vector>

#include "grrecon/projector.hpp"
#include "grrecon/types.hpp"

namespace grrecon {

enum class DataMode { poisson_nll, wls };

struct LossConfig {
    double lambda1 = 1.0;        // data-term weight
    double lambda2 = 1e-3;       // smoothness weight
    DataMode data_mode = DataMode::poisson_nll;
    double poisson_floor = 1e-6; // lower clamp on the model mean for log safety
    double tv_epsilon = 1e-3;    // Charbonnier smoothing constant

    void validate() const;
};

struct LossResult {
    double value = 0.0;
    std::vector<double> grad;  // same length as the differentiated argument
};

// Poisson mode evaluates the likelihood divergence
//   L = sum_i [ m_i - y_i + y_i*log(y_i/m_i) ],  m_i = max(y_hat_i + r_i + s_i, floor),
// which has the same gradient as the negative log-likelihood, 1 - y_i/m_i,
// but is shifted so L = 0 exactly at m = y (and L >= 0 everywhere). Bins where
// the floor clamp is active get zero gradient. WLS mode evaluates
// sum_i (y_hat_i + r_i + s_i - y_i)^2 / (2*max(y_i, 1)).
LossResult data_loss(const double* y_hat, const float* y, std::size_t n,
                     const ForwardModel& model, const LossConfig& cfg);

// Container convenience wrapper; geometry must match the model.
LossResult data_loss(const Sinogram& y_hat, const Sinogram& y, const ForwardModel& model,
                     const LossConfig& cfg);

// Smoothed anisotropic total variation over forward differences d:
//   L = sum_axes sum_d [ sqrt(d^2 + eps^2) - eps ].
LossResult tv_loss(const Grid& grid, const double* vol, const LossConfig& cfg);
LossResult tv_loss(const Volume& vol, const LossConfig& cfg);

}  // namespace grrecon
