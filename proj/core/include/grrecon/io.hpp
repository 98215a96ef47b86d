// io.hpp - sidecar-file IO. Every dataset is a pair <base>.json (header) and
// <base>.raw (little-endian IEEE-754 32-bit payload); round trips are
// bit-exact. Also provides PGM slice images and CSV emission helpers.
#pragma once

#include <string>

#include "grrecon/gaussian_cloud.hpp"
#include "grrecon/metrics.hpp"
#include "grrecon/types.hpp"

namespace grrecon {

// `base` may be given with or without a .json/.raw extension.
void write_volume(const std::string& base, const Volume& volume);
Volume read_volume(const std::string& base);

void write_sinogram(const std::string& base, const Sinogram& sino);
Sinogram read_sinogram(const std::string& base);

// Cloud checkpoint: JSON header {"n","support_k"} plus raw f32 rows
// (mu_x, mu_y, mu_z, sigma, intensity).
void write_cloud(const std::string& base, const GaussianCloud& cloud);
GaussianCloud read_cloud(const std::string& base);

// 8-bit binary PGM of a single slice, intensity-normalized by the slice max.
void write_pgm(const std::string& path, const std::vector<float>& pixels, int width, int height);

// One CSV row per metrics entry: label,psnr_db,ssim,mse (non-finite PSNR is
// written as "inf").
std::string metrics_csv_row(const std::string& label, const Metrics& m);

}  // namespace grrecon
