// gr_optimizer.hpp - sinogram-domain fit of the Gaussian set: objective
// evaluation (data term + smoothness), Adam-style updates per parameter
// group, and the outer loop with periodic density control.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "grrecon/density_control.hpp"
#include "grrecon/gaussian_cloud.hpp"
#include "grrecon/losses.hpp"
#include "grrecon/projector.hpp"
#include "grrecon/types.hpp"

namespace grrecon {

struct FitConfig {
    int iterations = 1500;           // 0 is allowed: returns the initial cloud untouched
    std::size_t init_count = 2000;
    double init_sigma = 1.5;         // voxels
    double init_intensity_min = 1e-3;
    int support_k = 11;
    double lr_mu = 2e-3;
    double lr_log_sigma = 5e-3;
    double lr_intensity = 1e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    // Divide the data term by the bin count and the smoothness term by the
    // voxel count, so loss magnitudes and the density-control gradient
    // thresholds do not scale with grid size.
    bool normalize_loss = true;
    bool deterministic = true;
    std::uint64_t seed = 0;

    void validate() const;
};

// Places init_count Gaussians by importance-sampling voxel positions from the
// clamped back-projection of the sinogram (uniform fallback when it is all
// zero), sigma = init_sigma, and a shared intensity scaled so the mean of the
// forward-projected init matches the sinogram mean. Seeded and reproducible.
GaussianCloud init_cloud(const Sinogram& y, const ForwardModel& model, const Grid& grid,
                         const FitConfig& cfg);

struct GrEvaluation {
    double data_value = 0.0;  // after lambda1 and optional normalization
    double tv_value = 0.0;    // after lambda2 and optional normalization
    double total = 0.0;
    ParamGrads grads;           // populated only when requested
    std::vector<double> field;  // rasterized volume (unclamped), f64
};

// Full-precision objective
//   L(cloud) = lambda1 * L_data(P max(raster(cloud), 0) | y) + lambda2 * L_tv(raster(cloud))
// with analytic gradients pulled back to every (mu, sigma, I). The clamp
// passes gradient only where the rasterized value is strictly positive.
class GrObjective {
public:
    GrObjective(const Sinogram& y, const ForwardModel& model, const Grid& grid,
                const LossConfig& loss_cfg, bool normalize = true, bool deterministic = true);

    GrEvaluation evaluate(const GaussianCloud& cloud, bool with_grads) const;

    const Grid& grid() const { return grid_; }

private:
    Sinogram y_;
    ForwardModel model_;
    Grid grid_;
    LossConfig loss_;
    bool normalize_;
    bool deterministic_;
};

struct TraceRow {
    int iter = 0;
    double data_loss = 0.0;
    double tv_loss = 0.0;
    double total = 0.0;
    std::size_t n_gaussians = 0;
};

struct FitResult {
    Volume x_gr;
    GaussianCloud cloud;
    std::vector<TraceRow> trace;
    std::size_t cap_dropped = 0;  // clone/split requests refused over the whole run
};

// Called once per iteration after the update, e.g. for checkpointing.
using FitObserver = std::function<void(const TraceRow&, const GaussianCloud&)>;

// Outer loop: evaluate -> Adam update (per-group step sizes, per-Gaussian
// moment age) -> density control every dc_cfg.interval iterations, with
// optimizer state remapped across prune/clone/split events. Throws
// std::runtime_error if the loss becomes non-finite.
FitResult fit_gr(const Sinogram& y, const ForwardModel& model, const Grid& grid,
                 const LossConfig& loss_cfg, const DensityControlConfig& dc_cfg,
                 const FitConfig& fit_cfg, const FitObserver& observer = {});

}  // namespace grrecon
