#include "grrecon/diffusion.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "grrecon/rng.hpp"

namespace grrecon {

void DiffusionSchedule::validate() const {
    if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    if (beta.size() != static_cast<std::size_t>(T) || alpha.size() != beta.size() ||
        alpha_bar.size() != beta.size() || sigma.size() != beta.size())
        throw std::invalid_argument("schedule: table lengths must equal T");
    double prev = 1.0;
    for (int i = 0; i < T; ++i) {
        if (!(beta[i] > 0.0 && beta[i] < 1.0))
            throw std::invalid_argument("schedule: beta must lie in (0,1)");
        if (!(alpha_bar[i] < prev))
            throw std::invalid_argument("schedule: alpha_bar must be strictly decreasing");
        prev = alpha_bar[i];
    }
}

void DiffusionSchedule::check_step(int t) const {
    if (t < 1 || t > T) throw std::out_of_range("schedule: step index out of [1, T]");
}

DiffusionSchedule build_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::invalid_argument("build_schedule: T must be >= 1");
    DiffusionSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.sigma.resize(T);
    double running = 1.0;
    for (int i = 0; i < T; ++i) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
        s.beta[i] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[i] = 1.0 - s.beta[i];
        running *= s.alpha[i];
        s.alpha_bar[i] = running;
        s.sigma[i] = std::sqrt(s.beta[i]);
    }
    s.validate();
    return s;
}

Volume q_sample(const Volume& x0, int t, const Volume& eps, const DiffusionSchedule& sched) {
    sched.check_step(t);
    x0.validate();
    eps.validate();
    if (!(x0.grid == eps.grid)) throw std::invalid_argument("q_sample: grid mismatch");
    const double a = std::sqrt(sched.alpha_bar_at(t));
    const double b = std::sqrt(1.0 - sched.alpha_bar_at(t));
    Volume out(x0.grid);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(a * x0.data[i] + b * eps.data[i]);
    return out;
}

void reverse_step_raw(std::vector<double>& x, const std::vector<double>& eps_hat, int t,
                      const DiffusionSchedule& sched, std::uint64_t step_seed) {
    sched.check_step(t);
    if (eps_hat.size() != x.size())
        throw std::invalid_argument("reverse_step: noise prediction shape mismatch");
    const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha_at(t));
    const double coef = sched.beta_at(t) / std::sqrt(1.0 - sched.alpha_bar_at(t));
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = inv_sqrt_alpha * (x[i] - coef * eps_hat[i]);
    if (t > 1) {
        auto rng = make_engine(step_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double s = sched.sigma_at(t);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * normal(rng);
    }
}

Volume reverse_step(const Volume& x_t, int t, const NoisePredictor& denoiser,
                    const DiffusionSchedule& sched, std::uint64_t step_seed) {
    x_t.validate();
    std::vector<double> x(x_t.data.begin(), x_t.data.end());
    std::vector<double> eps(x.size());
    denoiser.predict(x.data(), x.size(), t, sched, eps.data());
    reverse_step_raw(x, eps, t, sched, step_seed);
    Volume out(x_t.grid);
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = static_cast<float>(x[i]);
    return out;
}

std::vector<double> sample_raw(const NoisePredictor& denoiser, const DiffusionSchedule& sched,
                               std::size_t n, std::uint64_t seed, const GuidanceHook& hook) {
    sched.validate();
    std::vector<double> x(n);
    {
        auto rng = make_engine(seed, 0);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) x[i] = normal(rng);
    }
    std::vector<double> eps(n);
    for (int t = sched.T; t >= 1; --t) {
        denoiser.predict(x.data(), n, t, sched, eps.data());
        reverse_step_raw(x, eps, t, sched, mix_seed(seed, static_cast<std::uint64_t>(t)));
        if (hook) hook(x, t);
    }
    return x;
}

Volume sample(const NoisePredictor& denoiser, const DiffusionSchedule& sched, const Grid& grid,
              std::uint64_t seed, const GuidanceHook& hook) {
    grid.validate();
    const std::vector<double> x = sample_raw(denoiser, sched, grid.voxel_count(), seed, hook);
    Volume out(grid);
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = static_cast<float>(x[i]);
    return out;
}

void GmmPrior::validate(std::size_t n_voxels) const {
    if (components.empty()) throw std::invalid_argument("gmm prior: needs >= 1 component");
    double wsum = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("gmm prior: weights must be > 0");
        if (!(c.variance > 0.0)) throw std::invalid_argument("gmm prior: variances must be > 0");
        if (!c.mean_field.empty() && c.mean_field.size() != n_voxels)
            throw std::invalid_argument("gmm prior: mean field length mismatch");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw std::invalid_argument("gmm prior: weights must sum to 1");
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

void GmmNoisePredictor::predict(const double* x, std::size_t n, int t,
                                const DiffusionSchedule& sched, double* eps_out) const {
    sched.check_step(t);
    prior_.validate(n);
    const double abar = sched.alpha_bar_at(t);
    const double sqrt_abar = std::sqrt(abar);
    const double sqrt_1m = std::sqrt(1.0 - abar);
    const std::size_t K = prior_.components.size();

    if (K == 1) {
        // Single component: the responsibility is 1, no softmax needed.
        const auto& c = prior_.components[0];
        const double v = abar * c.variance + (1.0 - abar);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x[i] - sqrt_abar * c.mean_at(i);
            eps_out[i] = sqrt_1m * d / v;  // -sqrt(1-abar) * score
        }
        return;
    }

    std::vector<double> inv_v(K), log_norm(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double v = abar * prior_.components[k].variance + (1.0 - abar);
        inv_v[k] = 1.0 / v;
        log_norm[k] = std::log(prior_.components[k].weight) - 0.5 * (kLog2Pi + std::log(v));
    }
    std::vector<double> lp(K);
    for (std::size_t i = 0; i < n; ++i) {
        double lp_max = -1e300;
        for (std::size_t k = 0; k < K; ++k) {
            const double d = x[i] - sqrt_abar * prior_.components[k].mean_at(i);
            lp[k] = log_norm[k] - 0.5 * d * d * inv_v[k];
            if (lp[k] > lp_max) lp_max = lp[k];
        }
        double denom = 0.0, score = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double r = std::exp(lp[k] - lp_max);
            denom += r;
            const double d = x[i] - sqrt_abar * prior_.components[k].mean_at(i);
            score += r * (-d * inv_v[k]);
        }
        eps_out[i] = -sqrt_1m * score / denom;
    }
}

double gmm_log_marginal(const double* x, std::size_t n, int t, const GmmPrior& prior,
                        const DiffusionSchedule& sched) {
    sched.check_step(t);
    prior.validate(n);
    const double abar = sched.alpha_bar_at(t);
    const double sqrt_abar = std::sqrt(abar);
    const std::size_t K = prior.components.size();
    std::vector<double> inv_v(K), log_norm(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double v = abar * prior.components[k].variance + (1.0 - abar);
        inv_v[k] = 1.0 / v;
        log_norm[k] = std::log(prior.components[k].weight) - 0.5 * (kLog2Pi + std::log(v));
    }
    double total = 0.0;
    std::vector<double> lp(K);
    for (std::size_t i = 0; i < n; ++i) {
        double lp_max = -1e300;
        for (std::size_t k = 0; k < K; ++k) {
            const double d = x[i] - sqrt_abar * prior.components[k].mean_at(i);
            lp[k] = log_norm[k] - 0.5 * d * d * inv_v[k];
            if (lp[k] > lp_max) lp_max = lp[k];
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) acc += std::exp(lp[k] - lp_max);
        total += lp_max + std::log(acc);
    }
    return total;
}

}  // namespace grrecon
