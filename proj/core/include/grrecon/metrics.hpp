// metrics.hpp - PSNR / SSIM / MSE image-quality metrics.
#pragma once

#include "grrecon/types.hpp"

namespace grrecon {

struct Metrics {
    double psnr = 0.0;  // dB; +infinity sentinel when mse == 0
    double ssim = 0.0;  // in [-1, 1]
    double mse = 0.0;
};

// Slice orientation for per-view SSIM. SSIM is the mean of 2D SSIM maps over
// the slices perpendicular to the chosen axis; the default view is axial.
enum class View { axial, coronal, sagittal };

// mse  = mean squared difference.
// psnr = 10*log10(peak^2 / mse) with peak = max(reference).
// ssim = mean per-slice 2D SSIM, Gaussian window 11 (sigma 1.5), K1=0.01,
//        K2=0.03, dynamic range = max(reference). Window shrinks to the
//        largest odd size that fits when slices are smaller than 11.
// Throws on grid mismatch and on a reference with nonpositive peak.
Metrics compute_metrics(const Volume& test, const Volume& reference, View view = View::axial);

const char* view_name(View view);

}  // namespace grrecon
