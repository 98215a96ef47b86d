#include "grrecon/density_control.hpp"

#include <cmath>
#include <stdexcept>

namespace grrecon {

void DensityControlConfig::validate() const {
    if (!(tau_prune > 0.0) || !(tau_clone > 0.0) || !(tau_split > 0.0))
        throw std::invalid_argument("density control: thresholds must be > 0");
    if (interval < 1) throw std::invalid_argument("density control: interval must be >= 1");
    if (persistence < 1) throw std::invalid_argument("density control: persistence must be >= 1");
    if (max_gaussians < 1) throw std::invalid_argument("density control: max_gaussians must be >= 1");
    if (!(split_sigma_factor > 0.0) || split_sigma_factor > 1.0)
        throw std::invalid_argument("density control: split_sigma_factor must be in (0, 1]");
}

DensityController::DensityController(std::size_t initial_count, const DensityControlConfig& cfg)
    : cfg_(cfg), streak_(initial_count, 0) {
    cfg_.validate();
    if (initial_count > cfg_.max_gaussians)
        throw std::invalid_argument("density control: initial count exceeds max_gaussians");
}

DensityControlOutcome DensityController::step(const GaussianCloud& cloud,
                                              const ParamGrads& grads, const Grid& grid) {
    const std::size_t n = cloud.size();
    if (grads.size() != n || streak_.size() != n)
        throw std::invalid_argument("density control: gradient/cloud size mismatch");
    grid.validate();

    const double diag = std::sqrt(static_cast<double>(grid.dims[0]) * grid.dims[0] +
                                  static_cast<double>(grid.dims[1]) * grid.dims[1] +
                                  static_cast<double>(grid.dims[2]) * grid.dims[2]);
    const double sigma_max = cfg_.tau_split * diag;

    DensityControlOutcome out;
    out.cloud.support_k = cloud.support_k;

    // Pass 1: update streaks and decide survival.
    std::vector<char> keep(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(grads.intensity[i]) < cfg_.tau_prune)
            ++streak_[i];
        else
            streak_[i] = 0;
        if (streak_[i] >= cfg_.persistence) {
            keep[i] = 0;
            ++out.pruned;
        }
    }
    std::size_t n_keep = 0;
    for (std::size_t i = 0; i < n; ++i) n_keep += keep[i];

    // Pass 2: emit survivors, expanding split requests while the cap allows.
    std::vector<int> new_streak;
    std::vector<char> want_clone(n, 0);
    std::size_t total = n_keep;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        const auto& g = grads.mu[i];
        const double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        const double sigma = cloud.sigma(i);
        const bool split_wanted = sigma > sigma_max;
        if (split_wanted && total + 1 <= cfg_.max_gaussians) {
            ++total;
            ++out.split;
            int axis = 0;
            double best = std::abs(g[0]);
            for (int a = 1; a < 3; ++a)
                if (std::abs(g[a]) > best) { best = std::abs(g[a]); axis = a; }
            const double child_sigma = sigma * cfg_.split_sigma_factor;
            const double child_int = 0.5 * cloud.intensities[i];
            for (int side = -1; side <= 1; side += 2) {
                std::array<double, 3> c = cloud.centers[i];
                c[axis] += side * 0.5 * sigma;
                out.cloud.push_back(c, child_sigma, child_int);
                out.src.push_back(i);
                out.fresh.push_back(1);
                new_streak.push_back(0);
            }
            continue;
        }
        if (split_wanted) ++out.dropped;
        out.cloud.push_back(cloud.centers[i], sigma, cloud.intensities[i]);
        out.src.push_back(i);
        out.fresh.push_back(0);
        new_streak.push_back(streak_[i]);
        if (gnorm > cfg_.tau_clone) want_clone[i] = 1;
    }

    // Pass 3: append clones while the cap allows.
    for (std::size_t i = 0; i < n; ++i) {
        if (!want_clone[i]) continue;
        if (total + 1 > cfg_.max_gaussians) {
            ++out.dropped;
            continue;
        }
        ++total;
        ++out.cloned;
        const auto& g = grads.mu[i];
        const double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        const double sigma = cloud.sigma(i);
        std::array<double, 3> c = cloud.centers[i];
        for (int a = 0; a < 3; ++a) c[a] += sigma * g[a] / gnorm;
        out.cloud.push_back(c, sigma, cloud.intensities[i]);
        out.src.push_back(i);
        out.fresh.push_back(1);
        new_streak.push_back(0);
    }

    streak_ = std::move(new_streak);
    return out;
}

}  // namespace grrecon
