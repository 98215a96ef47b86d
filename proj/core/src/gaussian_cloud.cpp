#include "grrecon/gaussian_cloud.hpp"

#include <cmath>
#include <stdexcept>

namespace grrecon {

double GaussianCloud::sigma(std::size_t i) const {
    return std::exp(log_sigmas[i]);
}

void GaussianCloud::set_sigma(std::size_t i, double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("GaussianCloud: sigma must be > 0");
    log_sigmas[i] = std::log(sigma);
}

void GaussianCloud::push_back(const std::array<double, 3>& mu, double sigma, double intensity) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("GaussianCloud: sigma must be > 0");
    if (intensity < 0.0)
        throw std::invalid_argument("GaussianCloud: intensity must be >= 0");
    centers.push_back(mu);
    log_sigmas.push_back(std::log(sigma));
    intensities.push_back(intensity);
}

void GaussianCloud::erase(std::size_t i) {
    centers.erase(centers.begin() + static_cast<std::ptrdiff_t>(i));
    log_sigmas.erase(log_sigmas.begin() + static_cast<std::ptrdiff_t>(i));
    intensities.erase(intensities.begin() + static_cast<std::ptrdiff_t>(i));
}

void GaussianCloud::validate() const {
    if (support_k < 3 || support_k % 2 == 0)
        throw std::invalid_argument("GaussianCloud: support_k must be odd and >= 3");
    if (log_sigmas.size() != centers.size() || intensities.size() != centers.size())
        throw std::invalid_argument("GaussianCloud: parameter arrays must have equal length");
    for (std::size_t i = 0; i < centers.size(); ++i) {
        for (int a = 0; a < 3; ++a)
            if (!std::isfinite(centers[i][a]))
                throw std::invalid_argument("GaussianCloud: centers must be finite");
        if (!std::isfinite(log_sigmas[i]))
            throw std::invalid_argument("GaussianCloud: sigmas must be finite and > 0");
        if (intensities[i] < 0.0)
            throw std::invalid_argument("GaussianCloud: intensities must be >= 0");
    }
}

void decompose_center(const std::array<double, 3>& mu, std::array<int, 3>& floor_out,
                      std::array<double, 3>& delta_out) {
    for (int a = 0; a < 3; ++a) {
        if (!std::isfinite(mu[a]))
            throw std::invalid_argument("decompose_center: non-finite center coordinate");
        const double f = std::floor(mu[a]);
        floor_out[a] = static_cast<int>(f);
        delta_out[a] = mu[a] - f;  // exact: the fractional bits of mu
    }
}

LocalBox make_local_box(const std::array<double, 3>& mu, int support_k) {
    LocalBox box;
    box.k = support_k;
    decompose_center(mu, box.anchor, box.delta);
    return box;
}

std::vector<double> mahalanobis_sq(const LocalBox& box, double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("mahalanobis_sq: sigma must be > 0");
    const int k = box.k;
    const int half = (k - 1) / 2;
    const double inv_var = 1.0 / (sigma * sigma);
    const auto& d = box.delta;

    // S_dd = delta^T C^-1 delta, shared by every offset.
    const double s_dd = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) * inv_var;

    std::vector<double> out(static_cast<std::size_t>(k) * k * k);
    std::size_t idx = 0;
    for (int bz = -half; bz <= half; ++bz) {
        for (int by = -half; by <= half; ++by) {
            for (int bx = -half; bx <= half; ++bx) {
                const double s_bb = (static_cast<double>(bx) * bx + static_cast<double>(by) * by +
                                     static_cast<double>(bz) * bz) *
                                    inv_var;
                const double s_bd = (bx * d[0] + by * d[1] + bz * d[2]) * inv_var;
                const double s_db = s_bd;  // C^-1 is symmetric
                out[idx++] = s_bb - s_bd - s_db + s_dd;
            }
        }
    }
    return out;
}

}  // namespace grrecon
