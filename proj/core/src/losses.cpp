#include "grrecon/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace grrecon {

void LossConfig::validate() const {
    if (!(lambda1 > 0.0)) throw std::invalid_argument("loss config: lambda1 must be > 0");
    if (lambda2 < 0.0) throw std::invalid_argument("loss config: lambda2 must be >= 0");
    if (!(poisson_floor > 0.0))
        throw std::invalid_argument("loss config: poisson_floor must be > 0");
    if (!(tv_epsilon > 0.0)) throw std::invalid_argument("loss config: tv_epsilon must be > 0");
}

LossResult data_loss(const double* y_hat, const float* y, std::size_t n,
                     const ForwardModel& model, const LossConfig& cfg) {
    cfg.validate();
    LossResult out;
    out.grad.assign(n, 0.0);
    if (cfg.data_mode == DataMode::poisson_nll) {
        for (std::size_t i = 0; i < n; ++i) {
            const double yi = y[i];
            if (yi < 0.0) throw std::invalid_argument("data_loss: measured counts must be >= 0");
            const double raw = y_hat[i] + model.background(i);
            const bool clamped = raw < cfg.poisson_floor;
            const double m = clamped ? cfg.poisson_floor : raw;
            double v = m - yi;
            if (yi > 0.0) v += yi * std::log(yi / m);
            out.value += v;
            out.grad[i] = clamped ? 0.0 : 1.0 - yi / m;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double yi = y[i];
            if (yi < 0.0) throw std::invalid_argument("data_loss: measured counts must be >= 0");
            const double denom = yi > 1.0 ? yi : 1.0;
            const double r = y_hat[i] + model.background(i) - yi;
            out.value += 0.5 * r * r / denom;
            out.grad[i] = r / denom;
        }
    }
    return out;
}

LossResult data_loss(const Sinogram& y_hat, const Sinogram& y, const ForwardModel& model,
                     const LossConfig& cfg) {
    y_hat.validate();
    y.validate();
    if (!y_hat.same_geometry(y))
        throw std::invalid_argument("data_loss: sinogram geometry mismatch");
    if (!model.matches(y))
        throw std::invalid_argument("data_loss: model geometry mismatch");
    std::vector<double> yh(y_hat.data.begin(), y_hat.data.end());
    return data_loss(yh.data(), y.data.data(), yh.size(), model, cfg);
}

LossResult tv_loss(const Grid& grid, const double* vol, const LossConfig& cfg) {
    cfg.validate();
    grid.validate();
    const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
    const double eps2 = cfg.tv_epsilon * cfg.tv_epsilon;
    LossResult out;
    out.grad.assign(grid.voxel_count(), 0.0);
    const std::size_t strides[3] = {1, static_cast<std::size_t>(nx),
                                    static_cast<std::size_t>(nx) * ny};
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const std::size_t i = grid.index(x, y, z);
                const int coord[3] = {x, y, z};
                for (int a = 0; a < 3; ++a) {
                    if (coord[a] + 1 >= grid.dims[a]) continue;
                    const std::size_t j = i + strides[a];
                    const double d = vol[j] - vol[i];
                    const double root = std::sqrt(d * d + eps2);
                    out.value += root - cfg.tv_epsilon;
                    const double dd = d / root;
                    out.grad[j] += dd;
                    out.grad[i] -= dd;
                }
            }
    return out;
}

LossResult tv_loss(const Volume& vol, const LossConfig& cfg) {
    vol.validate();
    std::vector<double> v(vol.data.begin(), vol.data.end());
    return tv_loss(vol.grid, v.data(), cfg);
}

}  // namespace grrecon
