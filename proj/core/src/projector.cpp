#include "grrecon/projector.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "grrecon/parallel.hpp"

namespace grrecon {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Visits the (ix, iy, weight) samples of one ray through a 2D slice.
// Ray: { p : p_x cos(theta) + p_y sin(theta) = s } in world mm, traversed
// along direction (-sin, cos), with the detector array centered on the grid
// center. Samples are taken at unit steps of the dominant voxel axis; the
// transverse coordinate is linearly interpolated between the two neighboring
// voxels. Weights include the physical step length, so summing
// weight * value over the visits yields the line integral in value*mm.
template <typename Visit>
inline void walk_ray(const Grid& grid, double theta, double s, Visit&& visit) {
    const int nx = grid.dims[0];
    const int ny = grid.dims[1];
    const double sx = grid.voxel_size[0];
    const double sy = grid.voxel_size[1];
    const double c = std::cos(theta);
    const double sn = std::sin(theta);

    // Grid center in world coordinates (in-plane).
    const double cx = grid.origin[0] + 0.5 * (nx - 1) * sx;
    const double cy = grid.origin[1] + 0.5 * (ny - 1) * sy;

    // A point on the ray and the ray direction, both in voxel coordinates.
    const double px = (cx + s * c - grid.origin[0]) / sx;
    const double py = (cy + s * sn - grid.origin[1]) / sy;
    const double ux = -sn / sx;
    const double uy = c / sy;

    if (std::abs(ux) >= std::abs(uy)) {
        // x-dominant: one sample per voxel column.
        const double step_len = 1.0 / std::abs(ux);  // mm per unit x advance
        const double slope = uy / ux;
        for (int i = 0; i < nx; ++i) {
            const double yf = py + (static_cast<double>(i) - px) * slope;
            const double fl = std::floor(yf);
            const int j0 = static_cast<int>(fl);
            const double w1 = yf - fl;
            if (j0 >= 0 && j0 < ny && w1 < 1.0) visit(i, j0, step_len * (1.0 - w1));
            if (j0 + 1 >= 0 && j0 + 1 < ny && w1 > 0.0) visit(i, j0 + 1, step_len * w1);
        }
    } else {
        const double step_len = 1.0 / std::abs(uy);
        const double slope = ux / uy;
        for (int j = 0; j < ny; ++j) {
            const double xf = px + (static_cast<double>(j) - py) * slope;
            const double fl = std::floor(xf);
            const int i0 = static_cast<int>(fl);
            const double w1 = xf - fl;
            if (i0 >= 0 && i0 < nx && w1 < 1.0) visit(i0, j, step_len * (1.0 - w1));
            if (i0 + 1 >= 0 && i0 + 1 < nx && w1 > 0.0) visit(i0 + 1, j, step_len * w1);
        }
    }
}

inline double det_coord(const ForwardModel& m, int d) {
    return (static_cast<double>(d) - 0.5 * (m.n_det - 1)) * m.det_spacing;
}

}  // namespace

ForwardModel ForwardModel::for_grid(const Grid& grid, int n_angles, int n_det,
                                    double det_spacing) {
    grid.validate();
    ForwardModel m;
    m.n_angles = n_angles;
    m.n_det = n_det > 0 ? n_det
                        : static_cast<int>(std::ceil(1.5 * std::max(grid.dims[0], grid.dims[1])));
    m.n_slices = grid.dims[2];
    m.det_spacing = det_spacing > 0.0 ? det_spacing : grid.voxel_size[0];
    m.angles.resize(n_angles);
    for (int i = 0; i < n_angles; ++i) m.angles[i] = kPi * i / n_angles;
    m.validate();
    return m;
}

Sinogram ForwardModel::empty_sinogram() const {
    Sinogram s;
    s.n_angles = n_angles;
    s.n_det = n_det;
    s.n_slices = n_slices;
    s.angles = angles;
    s.det_spacing = det_spacing;
    s.data.assign(static_cast<std::size_t>(n_angles) * n_det * n_slices, 0.0f);
    return s;
}

void ForwardModel::validate() const {
    if (n_angles <= 0 || n_det <= 0 || n_slices <= 0)
        throw std::invalid_argument("forward model: all dimensions must be positive");
    if (static_cast<int>(angles.size()) != n_angles)
        throw std::invalid_argument("forward model: angles size mismatch");
    for (double a : angles)
        if (!(a >= 0.0 && a < kPi))
            throw std::invalid_argument("forward model: angles must lie in [0, pi)");
    if (!(det_spacing > 0.0))
        throw std::invalid_argument("forward model: det_spacing must be positive");
    if (randoms < 0.0 || scatter < 0.0)
        throw std::invalid_argument("forward model: background terms must be non-negative");
    const std::size_t bins = static_cast<std::size_t>(n_angles) * n_det * n_slices;
    if (!randoms_map.empty() && randoms_map.size() != bins)
        throw std::invalid_argument("forward model: randoms map size mismatch");
    if (!scatter_map.empty() && scatter_map.size() != bins)
        throw std::invalid_argument("forward model: scatter map size mismatch");
}

void ForwardModel::validate_against(const Grid& grid) const {
    validate();
    grid.validate();
    if (n_slices != grid.dims[2])
        throw std::invalid_argument("forward model: n_slices must equal grid nz");
}

bool ForwardModel::matches(const Sinogram& sino) const {
    return sino.n_angles == n_angles && sino.n_det == n_det && sino.n_slices == n_slices;
}

void forward_project_raw(const Grid& grid, const ForwardModel& model, const double* volume,
                         double* sino_out) {
    const int nx = grid.dims[0];
    const int ny = grid.dims[1];
    const std::size_t slice_pitch = static_cast<std::size_t>(nx) * ny;
    const std::size_t jobs = static_cast<std::size_t>(model.n_slices) * model.n_angles;
    // Each (slice, angle) job writes a disjoint run of bins: deterministic
    // for any thread count.
    parallel_for(jobs, [&](std::size_t job) {
        const int z = static_cast<int>(job / model.n_angles);
        const int a = static_cast<int>(job % model.n_angles);
        const double* img = volume + slice_pitch * z;
        const double theta = model.angles[a];
        double* out =
            sino_out + static_cast<std::size_t>(model.n_det) *
                           (a + static_cast<std::size_t>(model.n_angles) * z);
        for (int d = 0; d < model.n_det; ++d) {
            double acc = 0.0;
            walk_ray(grid, theta, det_coord(model, d),
                     [&](int ix, int iy, double w) { acc += w * img[ix + static_cast<std::size_t>(nx) * iy]; });
            out[d] = acc;
        }
    });
}

void back_project_raw(const Grid& grid, const ForwardModel& model, const double* sino,
                      double* volume_out) {
    const int nx = grid.dims[0];
    const int ny = grid.dims[1];
    const std::size_t slice_pitch = static_cast<std::size_t>(nx) * ny;
    // Parallel over slices only; within a slice rays are accumulated serially
    // in a fixed order so results do not depend on the thread count.
    parallel_for(static_cast<std::size_t>(model.n_slices), [&](std::size_t z) {
        double* img = volume_out + slice_pitch * z;
        for (std::size_t i = 0; i < slice_pitch; ++i) img[i] = 0.0;
        for (int a = 0; a < model.n_angles; ++a) {
            const double theta = model.angles[a];
            const double* row =
                sino + static_cast<std::size_t>(model.n_det) *
                           (a + static_cast<std::size_t>(model.n_angles) * z);
            for (int d = 0; d < model.n_det; ++d) {
                const double y = row[d];
                if (y == 0.0) continue;
                walk_ray(grid, theta, det_coord(model, d), [&](int ix, int iy, double w) {
                    img[ix + static_cast<std::size_t>(nx) * iy] += w * y;
                });
            }
        }
    });
}

Sinogram forward_project(const Volume& volume, const ForwardModel& model) {
    volume.validate();
    model.validate_against(volume.grid);
    std::vector<double> vol(volume.data.begin(), volume.data.end());
    std::vector<double> sino(static_cast<std::size_t>(model.n_angles) * model.n_det *
                             model.n_slices);
    forward_project_raw(volume.grid, model, vol.data(), sino.data());
    Sinogram out = model.empty_sinogram();
    for (std::size_t i = 0; i < sino.size(); ++i) out.data[i] = static_cast<float>(sino[i]);
    return out;
}

Volume back_project(const Sinogram& sino, const ForwardModel& model, const Grid& grid) {
    sino.validate();
    model.validate_against(grid);
    if (!model.matches(sino))
        throw std::invalid_argument("back_project: sinogram does not match the model geometry");
    std::vector<double> s(sino.data.begin(), sino.data.end());
    std::vector<double> vol(grid.voxel_count());
    back_project_raw(grid, model, s.data(), vol.data());
    Volume out;
    out.grid = grid;
    out.data.resize(vol.size());
    for (std::size_t i = 0; i < vol.size(); ++i) out.data[i] = static_cast<float>(vol[i]);
    return out;
}

}  // namespace grrecon
