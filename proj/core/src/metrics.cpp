#include "grrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace grrecon {
namespace {

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        w[i] = std::exp(-0.5 * d * d / (sigma * sigma));
        sum += w[i];
    }
    for (auto& v : w)
        v /= sum;
    return w;
}

// Separable Gaussian-weighted local mean, "valid" region only. img is w*h
// row-major (x fastest); out has the same layout with garbage outside the
// valid region (callers only read valid pixels).
void local_mean(const std::vector<double>& img, int w, int h, const std::vector<double>& win,
                std::vector<double>& tmp, std::vector<double>& out) {
    const int k = static_cast<int>(win.size());
    const int half = k / 2;
    // horizontal
    for (int y = 0; y < h; ++y) {
        for (int x = half; x < w - half; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i)
                s += win[i] * img[static_cast<std::size_t>(y) * w + x - half + i];
            tmp[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    // vertical
    for (int y = half; y < h - half; ++y) {
        for (int x = half; x < w - half; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i)
                s += win[i] * tmp[static_cast<std::size_t>(y - half + i) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
}

// Mean 2D SSIM over the valid region of a single slice pair.
double ssim_slice(const std::vector<double>& a, const std::vector<double>& b, int w, int h,
                  const std::vector<double>& win, double c1, double c2) {
    const int k = static_cast<int>(win.size());
    const int half = k / 2;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }

    std::vector<double> tmp(n), mu_a(n), mu_b(n), m_aa(n), m_bb(n), m_ab(n);
    local_mean(a, w, h, win, tmp, mu_a);
    local_mean(b, w, h, win, tmp, mu_b);
    local_mean(aa, w, h, win, tmp, m_aa);
    local_mean(bb, w, h, win, tmp, m_bb);
    local_mean(ab, w, h, win, tmp, m_ab);

    double sum = 0.0;
    std::size_t count = 0;
    for (int y = half; y < h - half; ++y) {
        for (int x = half; x < w - half; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double va = m_aa[i] - mu_a[i] * mu_a[i];
            const double vb = m_bb[i] - mu_b[i] * mu_b[i];
            const double cov = m_ab[i] - mu_a[i] * mu_b[i];
            const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
            const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
            sum += num / den;
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

// Extracts slice s perpendicular to `view` into a row-major (w, h) buffer.
void extract_slice(const Volume& v, View view, int s, std::vector<double>& out, int& w, int& h) {
    const auto& g = v.grid;
    switch (view) {
        case View::axial:  // (x, y) at fixed z
            w = g.dims[0];
            h = g.dims[1];
            out.resize(static_cast<std::size_t>(w) * h);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    out[static_cast<std::size_t>(y) * w + x] = v.at(x, y, s);
            break;
        case View::coronal:  // (x, z) at fixed y
            w = g.dims[0];
            h = g.dims[2];
            out.resize(static_cast<std::size_t>(w) * h);
            for (int z = 0; z < h; ++z)
                for (int x = 0; x < w; ++x)
                    out[static_cast<std::size_t>(z) * w + x] = v.at(x, s, z);
            break;
        case View::sagittal:  // (y, z) at fixed x
            w = g.dims[1];
            h = g.dims[2];
            out.resize(static_cast<std::size_t>(w) * h);
            for (int z = 0; z < h; ++z)
                for (int y = 0; y < w; ++y)
                    out[static_cast<std::size_t>(z) * w + y] = v.at(s, y, z);
            break;
    }
}

int slice_count(const Grid& g, View view) {
    switch (view) {
        case View::axial:
            return g.dims[2];
        case View::coronal:
            return g.dims[1];
        default:
            return g.dims[0];
    }
}

}  // namespace

const char* view_name(View view) {
    switch (view) {
        case View::axial:
            return "axial";
        case View::coronal:
            return "coronal";
        default:
            return "sagittal";
    }
}

Metrics compute_metrics(const Volume& test, const Volume& reference, View view) {
    test.validate();
    reference.validate();
    if (!(test.grid == reference.grid))
        throw std::invalid_argument("compute_metrics: grids must match");

    double peak = -std::numeric_limits<double>::infinity();
    for (float v : reference.data)
        peak = std::max(peak, static_cast<double>(v));
    if (!(peak > 0.0))
        throw std::invalid_argument("compute_metrics: reference peak must be > 0");

    double sq = 0.0;
    for (std::size_t i = 0; i < test.data.size(); ++i) {
        const double d = static_cast<double>(test.data[i]) - static_cast<double>(reference.data[i]);
        sq += d * d;
    }
    Metrics m;
    m.mse = sq / static_cast<double>(test.data.size());
    m.psnr = m.mse == 0.0 ? std::numeric_limits<double>::infinity()
                          : 10.0 * std::log10(peak * peak / m.mse);

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    int w = 0, h = 0;
    std::vector<double> sa, sb;
    extract_slice(test, view, 0, sa, w, h);
    int win_size = std::min(11, std::min(w, h));
    if (win_size % 2 == 0)
        --win_size;
    if (win_size < 1)
        win_size = 1;
    const auto win = gaussian_window(win_size, 1.5);

    const int n_slices = slice_count(test.grid, view);
    double ssim_sum = 0.0;
    for (int s = 0; s < n_slices; ++s) {
        extract_slice(test, view, s, sa, w, h);
        extract_slice(reference, view, s, sb, w, h);
        ssim_sum += ssim_slice(sa, sb, w, h, win, c1, c2);
    }
    m.ssim = ssim_sum / static_cast<double>(n_slices);
    return m;
}

}  // namespace grrecon
