#include "grrecon/gr_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "grrecon/rasterizer.hpp"
#include "grrecon/rng.hpp"

namespace grrecon {

void FitConfig::validate() const {
    if (iterations < 0) throw std::invalid_argument("fit config: iterations must be >= 0");
    if (init_count < 1) throw std::invalid_argument("fit config: init_count must be >= 1");
    if (!(init_sigma > 0.0)) throw std::invalid_argument("fit config: init_sigma must be > 0");
    if (!(init_intensity_min > 0.0))
        throw std::invalid_argument("fit config: init_intensity_min must be > 0");
    if (support_k < 3 || support_k % 2 == 0)
        throw std::invalid_argument("fit config: support_k must be odd and >= 3");
    if (!(lr_mu > 0.0) || !(lr_log_sigma > 0.0) || !(lr_intensity > 0.0))
        throw std::invalid_argument("fit config: step sizes must be > 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw std::invalid_argument("fit config: adam betas must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw std::invalid_argument("fit config: adam_eps must be > 0");
}

GaussianCloud init_cloud(const Sinogram& y, const ForwardModel& model, const Grid& grid,
                         const FitConfig& cfg) {
    cfg.validate();
    y.validate();
    model.validate_against(grid);
    if (!model.matches(y)) throw std::invalid_argument("init_cloud: sinogram/model mismatch");

    // Importance weights: clamped back-projection of the measurements.
    std::vector<double> ys(y.data.begin(), y.data.end());
    std::vector<double> bp(grid.voxel_count());
    back_project_raw(grid, model, ys.data(), bp.data());
    double wsum = 0.0;
    for (double& v : bp) {
        if (v < 0.0) v = 0.0;
        wsum += v;
    }

    auto rng = make_engine(cfg.seed, 0);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    GaussianCloud cloud;
    cloud.support_k = cfg.support_k;

    auto place_at = [&](std::size_t voxel) {
        const int nx = grid.dims[0], ny = grid.dims[1];
        const int x = static_cast<int>(voxel % nx);
        const int yy = static_cast<int>((voxel / nx) % ny);
        const int z = static_cast<int>(voxel / (static_cast<std::size_t>(nx) * ny));
        std::array<double, 3> mu{x + jitter(rng), yy + jitter(rng), z + jitter(rng)};
        cloud.push_back(mu, cfg.init_sigma, 1.0);
    };

    if (wsum > 0.0) {
        std::discrete_distribution<std::size_t> pick(bp.begin(), bp.end());
        for (std::size_t i = 0; i < cfg.init_count; ++i) place_at(pick(rng));
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, grid.voxel_count() - 1);
        for (std::size_t i = 0; i < cfg.init_count; ++i) place_at(pick(rng));
    }

    // Match the forward-projected mean to the measurement mean.
    double intensity = cfg.init_intensity_min;
    if (wsum > 0.0) {
        const std::vector<double> field = rasterize_dense(cloud, grid, true);
        std::vector<double> proj(y.bin_count());
        forward_project_raw(grid, model, field.data(), proj.data());
        double proj_sum = 0.0, y_sum = 0.0;
        for (double v : proj) proj_sum += v;
        for (double v : ys) y_sum += v;
        if (proj_sum > 0.0) intensity = std::max(y_sum / proj_sum, cfg.init_intensity_min);
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) cloud.intensities[i] = intensity;
    return cloud;
}

GrObjective::GrObjective(const Sinogram& y, const ForwardModel& model, const Grid& grid,
                         const LossConfig& loss_cfg, bool normalize, bool deterministic)
    : y_(y), model_(model), grid_(grid), loss_(loss_cfg), normalize_(normalize),
      deterministic_(deterministic) {
    y_.validate();
    model_.validate_against(grid_);
    if (!model_.matches(y_)) throw std::invalid_argument("objective: sinogram/model mismatch");
    loss_.validate();
}

GrEvaluation GrObjective::evaluate(const GaussianCloud& cloud, bool with_grads) const {
    GrEvaluation ev;
    ev.field = rasterize_dense(cloud, grid_, deterministic_);
    const std::size_t nvox = ev.field.size();
    const std::size_t nbin = y_.bin_count();

    std::vector<double> clamped(nvox);
    for (std::size_t i = 0; i < nvox; ++i) clamped[i] = ev.field[i] > 0.0 ? ev.field[i] : 0.0;

    std::vector<double> proj(nbin);
    forward_project_raw(grid_, model_, clamped.data(), proj.data());

    LossResult data = data_loss(proj.data(), y_.data.data(), nbin, model_, loss_);
    LossResult tv = tv_loss(grid_, ev.field.data(), loss_);

    const double dscale = loss_.lambda1 * (normalize_ ? 1.0 / static_cast<double>(nbin) : 1.0);
    const double tscale = loss_.lambda2 * (normalize_ ? 1.0 / static_cast<double>(nvox) : 1.0);
    ev.data_value = dscale * data.value;
    ev.tv_value = tscale * tv.value;
    ev.total = ev.data_value + ev.tv_value;

    if (!with_grads) return ev;

    for (double& g : data.grad) g *= dscale;
    std::vector<double> upstream(nvox);
    back_project_raw(grid_, model_, data.grad.data(), upstream.data());
    for (std::size_t i = 0; i < nvox; ++i) {
        // Clamp subgradient: block where the rasterized value was clipped.
        if (!(ev.field[i] > 0.0)) upstream[i] = 0.0;
        upstream[i] += tscale * tv.grad[i];
    }
    ev.grads = rasterize_backward(cloud, grid_, upstream.data());
    return ev;
}

namespace {

// Adam moments per Gaussian, remapped across density-control events:
// survivors keep their moments and age, clones and split children start cold.
struct AdamState {
    std::vector<std::array<double, 3>> m_mu, v_mu;
    std::vector<double> m_ls, v_ls, m_in, v_in;
    std::vector<int> age;

    explicit AdamState(std::size_t n)
        : m_mu(n, {0, 0, 0}), v_mu(n, {0, 0, 0}), m_ls(n, 0.0), v_ls(n, 0.0), m_in(n, 0.0),
          v_in(n, 0.0), age(n, 0) {}

    void remap(const DensityControlOutcome& oc) {
        AdamState next(oc.cloud.size());
        for (std::size_t j = 0; j < oc.cloud.size(); ++j) {
            if (oc.fresh[j]) continue;
            const std::size_t i = oc.src[j];
            next.m_mu[j] = m_mu[i];
            next.v_mu[j] = v_mu[i];
            next.m_ls[j] = m_ls[i];
            next.v_ls[j] = v_ls[i];
            next.m_in[j] = m_in[i];
            next.v_in[j] = v_in[i];
            next.age[j] = age[i];
        }
        *this = std::move(next);
    }
};

inline double adam_delta(double& m, double& v, double g, double beta1, double beta2, double eps,
                         int t, double lr) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double mhat = m / (1.0 - std::pow(beta1, t));
    const double vhat = v / (1.0 - std::pow(beta2, t));
    return -lr * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace

FitResult fit_gr(const Sinogram& y, const ForwardModel& model, const Grid& grid,
                 const LossConfig& loss_cfg, const DensityControlConfig& dc_cfg,
                 const FitConfig& fit_cfg, const FitObserver& observer) {
    fit_cfg.validate();
    dc_cfg.validate();
    GrObjective objective(y, model, grid, loss_cfg, fit_cfg.normalize_loss,
                          fit_cfg.deterministic);

    FitResult result;
    result.cloud = init_cloud(y, model, grid, fit_cfg);
    AdamState adam(result.cloud.size());
    DensityController controller(result.cloud.size(), dc_cfg);

    for (int iter = 1; iter <= fit_cfg.iterations; ++iter) {
        GrEvaluation ev = objective.evaluate(result.cloud, true);
        if (!std::isfinite(ev.total))
            throw std::runtime_error("fit diverged: non-finite loss at iteration " +
                                     std::to_string(iter));
        TraceRow row{iter, ev.data_value, ev.tv_value, ev.total, result.cloud.size()};
        result.trace.push_back(row);

        for (std::size_t i = 0; i < result.cloud.size(); ++i) {
            const int t = ++adam.age[i];
            for (int a = 0; a < 3; ++a)
                result.cloud.centers[i][a] +=
                    adam_delta(adam.m_mu[i][a], adam.v_mu[i][a], ev.grads.mu[i][a],
                               fit_cfg.adam_beta1, fit_cfg.adam_beta2, fit_cfg.adam_eps, t,
                               fit_cfg.lr_mu);
            // Chain rule into log-space: dL/dlog(sigma) = sigma * dL/dsigma.
            const double g_ls = result.cloud.sigma(i) * ev.grads.sigma[i];
            result.cloud.log_sigmas[i] +=
                adam_delta(adam.m_ls[i], adam.v_ls[i], g_ls, fit_cfg.adam_beta1,
                           fit_cfg.adam_beta2, fit_cfg.adam_eps, t, fit_cfg.lr_log_sigma);
            double intensity =
                result.cloud.intensities[i] +
                adam_delta(adam.m_in[i], adam.v_in[i], ev.grads.intensity[i],
                           fit_cfg.adam_beta1, fit_cfg.adam_beta2, fit_cfg.adam_eps, t,
                           fit_cfg.lr_intensity);
            result.cloud.intensities[i] = intensity > 0.0 ? intensity : 0.0;
        }

        if (dc_cfg.interval > 0 && iter % dc_cfg.interval == 0 && iter < fit_cfg.iterations) {
            DensityControlOutcome oc = controller.step(result.cloud, ev.grads, grid);
            adam.remap(oc);
            result.cap_dropped += oc.dropped;
            result.cloud = std::move(oc.cloud);
        }

        if (observer) observer(row, result.cloud);
    }

    result.x_gr = rasterize(result.cloud, grid, fit_cfg.deterministic);
    return result;
}

}  // namespace grrecon
