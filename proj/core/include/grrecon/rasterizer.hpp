// rasterizer.hpp - splats the Gaussian set onto the voxel grid and pulls
// voxel-space gradients back onto the per-Gaussian parameters.
#pragma once

#include <vector>

#include "grrecon/gaussian_cloud.hpp"
#include "grrecon/types.hpp"

namespace grrecon {

// lambda(v) = sum_g I_g * exp(-0.5 * ||v - mu_g||^2 / sigma_g^2), evaluated
// over each Gaussian's K^3 support box; voxels outside the grid are skipped.
// Deterministic mode accumulates Gaussians serially in index order so the
// result is bit-stable; the non-deterministic path parallelizes over
// Gaussians with atomic adds (order-dependent rounding only).
std::vector<double> rasterize_dense(const GaussianCloud& cloud, const Grid& grid,
                                    bool deterministic = true);

// Same field quantized to the f32 volume container.
Volume rasterize(const GaussianCloud& cloud, const Grid& grid, bool deterministic = true);

// Given upstream = dL/dlambda per voxel, returns dL/d(mu, sigma, I) for every
// Gaussian:
//   dL/dI_g      = sum_v upstream(v) * w_g(v)
//   dL/dmu_g     = sum_v upstream(v) * I_g * w_g(v) * (v - mu_g) / sigma_g^2
//   dL/dsigma_g  = sum_v upstream(v) * I_g * w_g(v) * ||v - mu_g||^2 / sigma_g^3
// with w_g(v) = exp(-0.5 * ||v - mu_g||^2 / sigma_g^2). Each Gaussian owns its
// output row, so this is deterministic under any thread count.
ParamGrads rasterize_backward(const GaussianCloud& cloud, const Grid& grid,
                              const double* upstream);

}  // namespace grrecon
