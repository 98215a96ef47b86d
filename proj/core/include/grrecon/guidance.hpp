// guidance.hpp - dual-path image-space guidance for the reverse sampler: a
// fine term from the voxelwise l1 distance to the reference volume and a
// coarse term from multi-scale blurred l1 distances, plus the step-window
// schedule and the sign-surrogate validator.
#pragma once

#include <cstddef>
#include <vector>

#include "grrecon/diffusion.hpp"
#include "grrecon/types.hpp"

namespace grrecon {

struct GuidanceConfig {
    double eta = 0.5;    // fine strength
    double omega = 0.5;  // coarse strength
    // Blur scales are VARIANCES (the blur op itself takes a standard
    // deviation; sqrt is applied when building kernels).
    std::vector<double> kernel_sigmas = {1.0, 2.0, 4.0};
    int kernel_size = 3;                // odd
    std::vector<double> delta_weights;  // empty -> equal weights 1/N
    double window_start = 0.4;          // fraction of T
    double window_end = 0.6;
    double xi = 0.0;             // validator threshold (> 0 when used); never drives sampling
    bool scale_with_beta = true; // multiply strengths by sqrt(beta_t)

    void validate() const;
    std::vector<double> resolved_weights() const;
};

// -eta * sign(x_pred - x_gr) elementwise, with sign(0) = 0.
Volume fine_grad(const Volume& x_pred, const Volume& x_gr, double eta);
void fine_grad_raw(const double* x_pred, const double* x_gr, std::size_t n, double eta,
                   double* out);

// Separable convolution with a normalized truncated Gaussian (`size` taps per
// axis, `sigma` is the standard deviation). Boundaries reflect half-sample
// style (... x1 x0 | x0 x1 ...), which makes the operator self-adjoint, so
// the same routine serves as the transpose in gradient computations.
Volume gaussian_blur3d(const Volume& vol, double sigma, int size);
void gaussian_blur3d_raw(const Grid& grid, const double* in, double sigma, int size,
                         double* out);

// Exact gradient of -omega * sum_s delta_s ||G_s (x_pred - x_gr)||_1 under the
// sign(0) = 0 convention: -omega * sum_s delta_s G_s^T sign(G_s (x_pred - x_gr)).
Volume coarse_grad(const Volume& x_pred, const Volume& x_gr, const GuidanceConfig& cfg);
void coarse_grad_raw(const Grid& grid, const double* x_pred, const double* x_gr,
                     const GuidanceConfig& cfg, double* out);

// True iff lround(start*T) <= t <= lround(end*T).
bool in_window(int t, int T, const GuidanceConfig& cfg);

// Correction applied to the post-update state x_{t-1}: fine + coarse inside
// the window (strengths optionally scaled by sqrt(beta_t)), zero outside.
Volume guided_correction(const Volume& x_next, int t, const Volume& x_gr,
                         const GuidanceConfig& cfg, const DiffusionSchedule& sched);

// Hook for the sampler: adds the correction in place after each step.
GuidanceHook make_guidance_hook(std::vector<double> x_gr, const Grid& grid,
                                const GuidanceConfig& cfg, const DiffusionSchedule& sched);

// Validator for the sign-surrogate property: guidance toward x_gr and toward
// the (normally unavailable) ground truth agree in sign wherever the iterate
// is farther than xi from the ground truth, provided max|x_gt - x_gr| < xi.
struct SurrogateReport {
    bool precondition_met = false;    // max|x_gt - x_gr| < xi
    std::size_t n_qualifying = 0;     // voxels with |x_t - x_gt| > xi
    double qualifying_fraction = 0.0;
    double sign_agreement = 1.0;      // on the qualifying set (1.0 if empty)
    bool applicable = false;          // qualifying set nonempty
    double grad_cosine = 0.0;         // cosine of the two sign fields, all voxels
};

SurrogateReport surrogate_check(const Volume& x_t, const Volume& x_gr, const Volume& x_gt,
                                double xi);

}  // namespace grrecon
