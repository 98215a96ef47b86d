// projector.hpp - stacked parallel-beam line-integral projector. Forward and
// back projection share one ray-walking kernel, so the back projection is the
// exact transpose of the discrete forward operation.
#pragma once

#include <cstddef>
#include <vector>

#include "grrecon/types.hpp"

namespace grrecon {

// System model: acquisition geometry plus additive background expectations
// (randoms r and scatter s), either scalar or per-bin.
struct ForwardModel {
    int n_angles = 0;
    int n_det = 0;
    int n_slices = 0;
    std::vector<double> angles;  // radians in [0, pi)
    double det_spacing = 1.0;    // mm
    double randoms = 0.0;
    double scatter = 0.0;
    std::vector<float> randoms_map;  // optional; overrides the scalar when non-empty
    std::vector<float> scatter_map;

    // Desk default: uniform angles in [0, pi), n_det = ceil(1.5 * max(nx, ny)),
    // det_spacing = in-plane voxel size, one sinogram plane per axial slice.
    static ForwardModel for_grid(const Grid& grid, int n_angles = 60, int n_det = 0,
                                 double det_spacing = 0.0);

    Sinogram empty_sinogram() const;
    void validate() const;
    void validate_against(const Grid& grid) const;
    bool matches(const Sinogram& sino) const;

    double background(std::size_t bin) const {
        const double r = randoms_map.empty() ? randoms : static_cast<double>(randoms_map[bin]);
        const double s = scatter_map.empty() ? scatter : static_cast<double>(scatter_map[bin]);
        return r + s;
    }
};

// y_hat = P * volume. Per slice and angle, each detector bin is the line
// integral along its ray, sampled with linear interpolation at unit steps in
// the dominant voxel axis and scaled by the physical step length. Background
// terms are NOT added here; they enter only in the data loss.
Sinogram forward_project(const Volume& volume, const ForwardModel& model);

// Exact adjoint of forward_project: <Px, y> == <x, P^T y> up to rounding.
Volume back_project(const Sinogram& sino, const ForwardModel& model, const Grid& grid);

// Double-precision kernels used by the optimizer and by gradient tests.
// Buffers are x-fastest volumes / det-fastest sinograms as in the containers.
void forward_project_raw(const Grid& grid, const ForwardModel& model, const double* volume,
                         double* sino_out);
void back_project_raw(const Grid& grid, const ForwardModel& model, const double* sino,
                      double* volume_out);

}  // namespace grrecon
