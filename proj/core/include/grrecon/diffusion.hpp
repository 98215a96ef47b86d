// diffusion.hpp - denoising-diffusion machinery: noise schedule, forward
// noising, ancestral reverse sampling with a pluggable noise predictor, and
// an exact closed-form Gaussian-mixture predictor used for verification.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "grrecon/types.hpp"

namespace grrecon {

// Precomputed per-step tables, 1-based step index t in [1, T].
struct DiffusionSchedule {
    int T = 0;
    std::vector<double> beta;       // beta_t in (0,1)
    std::vector<double> alpha;      // 1 - beta_t
    std::vector<double> alpha_bar;  // prod_{s<=t} alpha_s, strictly decreasing
    std::vector<double> sigma;      // sqrt(beta_t)

    double beta_at(int t) const { return beta[t - 1]; }
    double alpha_at(int t) const { return alpha[t - 1]; }
    double alpha_bar_at(int t) const { return alpha_bar[t - 1]; }
    double sigma_at(int t) const { return sigma[t - 1]; }

    void validate() const;
    void check_step(int t) const;
};

// Linear beta ramp from beta_start to beta_end over T steps (T = 1 uses
// beta_start alone).
DiffusionSchedule build_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

// Closed-form forward noising: sqrt(abar_t)*x0 + sqrt(1-abar_t)*eps.
Volume q_sample(const Volume& x0, int t, const Volume& eps, const DiffusionSchedule& sched);

// Noise-prediction contract. Implementations must be deterministic for fixed
// (x, t) and safe for concurrent read-only use.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual void predict(const double* x, std::size_t n, int t, const DiffusionSchedule& sched,
                         double* eps_out) const = 0;
};

// One ancestral step:
//   x_{t-1} = (x_t - beta_t/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t) + sigma_t * z
// with z ~ N(0, I) drawn from the given seed; the t = 1 step omits the noise.
// The caller supplies the per-step seed (the chain driver derives one per t).
void reverse_step_raw(std::vector<double>& x, const std::vector<double>& eps_hat, int t,
                      const DiffusionSchedule& sched, std::uint64_t step_seed);

Volume reverse_step(const Volume& x_t, int t, const NoisePredictor& denoiser,
                    const DiffusionSchedule& sched, std::uint64_t step_seed);

// Applies an additive in-place correction to the post-update state; `t` is
// the step that just ran (T..1).
using GuidanceHook = std::function<void(std::vector<double>& x, int t)>;

// Full chain: x_T ~ N(0, I) from stream 0 of `seed`, then reverse steps for
// t = T..1 with per-step noise from stream t, invoking the hook after each
// step when provided. Returns x_0.
Volume sample(const NoisePredictor& denoiser, const DiffusionSchedule& sched, const Grid& grid,
              std::uint64_t seed, const GuidanceHook& hook = {});

std::vector<double> sample_raw(const NoisePredictor& denoiser, const DiffusionSchedule& sched,
                               std::size_t n, std::uint64_t seed, const GuidanceHook& hook = {});

// Verification prior: mixture of isotropic Gaussians over volume space with
// voxelwise-independent coordinates. Component means are either one scalar
// broadcast over the volume or a full per-voxel field.
struct GmmComponent {
    double weight = 1.0;
    double mean_scalar = 0.0;
    std::vector<double> mean_field;  // empty -> broadcast mean_scalar
    double variance = 1.0;

    double mean_at(std::size_t i) const {
        return mean_field.empty() ? mean_scalar : mean_field[i];
    }
};

struct GmmPrior {
    std::vector<GmmComponent> components;
    void validate(std::size_t n_voxels) const;  // weights > 0 summing to 1, variances > 0
};

// Exact noise prediction for the mixture prior: with marginal
//   p_t(x_i) = sum_k w_k N(x_i; sqrt(abar_t) m_{k,i}, abar_t s_k^2 + 1 - abar_t)
// the predictor returns eps_hat = -sqrt(1-abar_t) * d/dx log p_t(x), using
// log-sum-exp stabilized responsibilities.
class GmmNoisePredictor : public NoisePredictor {
public:
    explicit GmmNoisePredictor(GmmPrior prior) : prior_(std::move(prior)) {}
    void predict(const double* x, std::size_t n, int t, const DiffusionSchedule& sched,
                 double* eps_out) const override;
    const GmmPrior& prior() const { return prior_; }

private:
    GmmPrior prior_;
};

// Sum over voxels of the log marginal density at step t; the finite-difference
// oracle for the predictor differentiates this.
double gmm_log_marginal(const double* x, std::size_t n, int t, const GmmPrior& prior,
                        const DiffusionSchedule& sched);

}  // namespace grrecon
