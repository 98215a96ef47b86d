#include "grrecon/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace grrecon {
namespace {

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Half-sample symmetric fold: -1 -> 0, -2 -> 1, n -> n-1, ...
inline int fold(int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -1 - i : 2 * n - 1 - i;
    return i;
}

std::vector<double> make_kernel(double sigma, int size) {
    if (size < 1 || size % 2 == 0)
        throw std::invalid_argument("gaussian_blur3d: kernel size must be odd and >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur3d: sigma must be > 0");
    std::vector<double> w(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        w[i + half] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += w[i + half];
    }
    for (double& v : w) v /= sum;
    return w;
}

// One axis of the separable blur; in and out are full volumes.
void blur_axis(const Grid& grid, const std::vector<double>& kernel, int axis, const double* in,
               double* out) {
    const int n = grid.dims[axis];
    const int half = static_cast<int>(kernel.size()) / 2;
    const std::size_t stride = axis == 0 ? 1
                               : axis == 1
                                   ? static_cast<std::size_t>(grid.dims[0])
                                   : static_cast<std::size_t>(grid.dims[0]) * grid.dims[1];
    // Iterate over all lines along `axis`.
    const int d0 = grid.dims[0], d1 = grid.dims[1], d2 = grid.dims[2];
    auto process_line = [&](std::size_t base) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = -half; k <= half; ++k)
                acc += kernel[k + half] * in[base + stride * fold(i + k, n)];
            out[base + stride * i] = acc;
        }
    };
    if (axis == 0) {
        for (int z = 0; z < d2; ++z)
            for (int y = 0; y < d1; ++y) process_line(grid.index(0, y, z));
    } else if (axis == 1) {
        for (int z = 0; z < d2; ++z)
            for (int x = 0; x < d0; ++x) process_line(grid.index(x, 0, z));
    } else {
        for (int y = 0; y < d1; ++y)
            for (int x = 0; x < d0; ++x) process_line(grid.index(x, y, 0));
    }
}

}  // namespace

void GuidanceConfig::validate() const {
    if (eta < 0.0 || omega < 0.0)
        throw std::invalid_argument("guidance: strengths must be >= 0");
    if (kernel_sigmas.empty())
        throw std::invalid_argument("guidance: need at least one kernel scale");
    for (double v : kernel_sigmas)
        if (!(v > 0.0)) throw std::invalid_argument("guidance: kernel scales must be > 0");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("guidance: kernel_size must be odd");
    if (!delta_weights.empty()) {
        if (delta_weights.size() != kernel_sigmas.size())
            throw std::invalid_argument("guidance: delta_weights length mismatch");
        double sum = 0.0;
        for (double v : delta_weights) {
            if (!(v > 0.0)) throw std::invalid_argument("guidance: delta_weights must be > 0");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("guidance: delta_weights must sum to 1");
    }
    // (0, 0) is the degenerate "never active" window: t >= 1 never qualifies.
    if (!(window_start >= 0.0 && window_start <= window_end && window_end <= 1.0))
        throw std::invalid_argument("guidance: window must satisfy 0 <= start <= end <= 1");
}

std::vector<double> GuidanceConfig::resolved_weights() const {
    if (!delta_weights.empty()) return delta_weights;
    return std::vector<double>(kernel_sigmas.size(), 1.0 / kernel_sigmas.size());
}

void fine_grad_raw(const double* x_pred, const double* x_gr, std::size_t n, double eta,
                   double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = -eta * sign0(x_pred[i] - x_gr[i]);
}

Volume fine_grad(const Volume& x_pred, const Volume& x_gr, double eta) {
    x_pred.validate();
    x_gr.validate();
    if (!(x_pred.grid == x_gr.grid)) throw std::invalid_argument("fine_grad: grid mismatch");
    Volume out(x_pred.grid);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(
            -eta * sign0(static_cast<double>(x_pred.data[i]) - x_gr.data[i]));
    return out;
}

void gaussian_blur3d_raw(const Grid& grid, const double* in, double sigma, int size,
                         double* out) {
    grid.validate();
    const std::vector<double> kernel = make_kernel(sigma, size);
    std::vector<double> tmp(grid.voxel_count());
    blur_axis(grid, kernel, 0, in, out);
    blur_axis(grid, kernel, 1, out, tmp.data());
    blur_axis(grid, kernel, 2, tmp.data(), out);
}

Volume gaussian_blur3d(const Volume& vol, double sigma, int size) {
    vol.validate();
    std::vector<double> in(vol.data.begin(), vol.data.end());
    std::vector<double> out(in.size());
    gaussian_blur3d_raw(vol.grid, in.data(), sigma, size, out.data());
    Volume res(vol.grid);
    for (std::size_t i = 0; i < out.size(); ++i) res.data[i] = static_cast<float>(out[i]);
    return res;
}

void coarse_grad_raw(const Grid& grid, const double* x_pred, const double* x_gr,
                     const GuidanceConfig& cfg, double* out) {
    cfg.validate();
    const std::size_t n = grid.voxel_count();
    const std::vector<double> weights = cfg.resolved_weights();
    std::vector<double> diff(n), blurred(n), signed_field(n);
    for (std::size_t i = 0; i < n; ++i) {
        diff[i] = x_pred[i] - x_gr[i];
        out[i] = 0.0;
    }
    for (std::size_t s = 0; s < cfg.kernel_sigmas.size(); ++s) {
        const double stddev = std::sqrt(cfg.kernel_sigmas[s]);
        gaussian_blur3d_raw(grid, diff.data(), stddev, cfg.kernel_size, blurred.data());
        for (std::size_t i = 0; i < n; ++i) signed_field[i] = sign0(blurred[i]);
        // Pull the sign field back through the (self-adjoint) blur.
        gaussian_blur3d_raw(grid, signed_field.data(), stddev, cfg.kernel_size, blurred.data());
        const double w = cfg.omega * weights[s];
        for (std::size_t i = 0; i < n; ++i) out[i] -= w * blurred[i];
    }
}

Volume coarse_grad(const Volume& x_pred, const Volume& x_gr, const GuidanceConfig& cfg) {
    x_pred.validate();
    x_gr.validate();
    if (!(x_pred.grid == x_gr.grid)) throw std::invalid_argument("coarse_grad: grid mismatch");
    const std::size_t n = x_pred.data.size();
    std::vector<double> a(x_pred.data.begin(), x_pred.data.end());
    std::vector<double> b(x_gr.data.begin(), x_gr.data.end());
    std::vector<double> out(n);
    coarse_grad_raw(x_pred.grid, a.data(), b.data(), cfg, out.data());
    Volume res(x_pred.grid);
    for (std::size_t i = 0; i < n; ++i) res.data[i] = static_cast<float>(out[i]);
    return res;
}

bool in_window(int t, int T, const GuidanceConfig& cfg) {
    const long lo = std::lround(cfg.window_start * T);
    const long hi = std::lround(cfg.window_end * T);
    return t >= lo && t <= hi;
}

Volume guided_correction(const Volume& x_next, int t, const Volume& x_gr,
                         const GuidanceConfig& cfg, const DiffusionSchedule& sched) {
    x_next.validate();
    x_gr.validate();
    if (!(x_next.grid == x_gr.grid))
        throw std::invalid_argument("guided_correction: grid mismatch");
    cfg.validate();
    sched.check_step(t);
    Volume out(x_next.grid, 0.0f);
    if (!in_window(t, sched.T, cfg)) return out;
    const double scale = cfg.scale_with_beta ? std::sqrt(sched.beta_at(t)) : 1.0;
    const std::size_t n = out.data.size();
    std::vector<double> a(x_next.data.begin(), x_next.data.end());
    std::vector<double> b(x_gr.data.begin(), x_gr.data.end());
    std::vector<double> fine(n), coarse(n);
    fine_grad_raw(a.data(), b.data(), n, cfg.eta * scale, fine.data());
    GuidanceConfig scaled = cfg;
    scaled.omega = cfg.omega * scale;
    coarse_grad_raw(x_next.grid, a.data(), b.data(), scaled, coarse.data());
    for (std::size_t i = 0; i < n; ++i) out.data[i] = static_cast<float>(fine[i] + coarse[i]);
    return out;
}

GuidanceHook make_guidance_hook(std::vector<double> x_gr, const Grid& grid,
                                const GuidanceConfig& cfg, const DiffusionSchedule& sched) {
    cfg.validate();
    if (x_gr.size() != grid.voxel_count())
        throw std::invalid_argument("make_guidance_hook: reference size mismatch");
    return [x_gr = std::move(x_gr), grid, cfg, sched](std::vector<double>& x, int t) {
        if (!in_window(t, sched.T, cfg)) return;
        const double scale = cfg.scale_with_beta ? std::sqrt(sched.beta_at(t)) : 1.0;
        const std::size_t n = x.size();
        if (cfg.eta > 0.0) {
            const double eta = cfg.eta * scale;
            for (std::size_t i = 0; i < n; ++i) x[i] -= eta * sign0(x[i] - x_gr[i]);
        }
        if (cfg.omega > 0.0) {
            std::vector<double> corr(n);
            GuidanceConfig scaled = cfg;
            scaled.omega = cfg.omega * scale;
            coarse_grad_raw(grid, x.data(), x_gr.data(), scaled, corr.data());
            for (std::size_t i = 0; i < n; ++i) x[i] += corr[i];
        }
    };
}

SurrogateReport surrogate_check(const Volume& x_t, const Volume& x_gr, const Volume& x_gt,
                                double xi) {
    x_t.validate();
    x_gr.validate();
    x_gt.validate();
    if (!(x_t.grid == x_gr.grid) || !(x_t.grid == x_gt.grid))
        throw std::invalid_argument("surrogate_check: grid mismatch");
    if (!(xi > 0.0)) throw std::invalid_argument("surrogate_check: xi must be > 0");

    SurrogateReport rep;
    const std::size_t n = x_t.data.size();
    double d_inf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(static_cast<double>(x_gt.data[i]) - x_gr.data[i]);
        if (d > d_inf) d_inf = d;
    }
    rep.precondition_met = d_inf < xi;

    std::size_t agree = 0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double to_gt = static_cast<double>(x_t.data[i]) - x_gt.data[i];
        const double to_gr = static_cast<double>(x_t.data[i]) - x_gr.data[i];
        const double sa = sign0(to_gr), sb = sign0(to_gt);
        dot += sa * sb;
        na += sa * sa;
        nb += sb * sb;
        if (std::abs(to_gt) > xi) {
            ++rep.n_qualifying;
            if (sa == sb) ++agree;
        }
    }
    rep.qualifying_fraction = n ? static_cast<double>(rep.n_qualifying) / n : 0.0;
    rep.applicable = rep.n_qualifying > 0;
    rep.sign_agreement = rep.applicable ? static_cast<double>(agree) / rep.n_qualifying : 1.0;
    if (na > 0.0 && nb > 0.0)
        rep.grad_cosine = dot / (std::sqrt(na) * std::sqrt(nb));
    else
        rep.grad_cosine = (na == 0.0 && nb == 0.0) ? 1.0 : 0.0;
    return rep;
}

}  // namespace grrecon
