// types.hpp - voxel grid, dense volume, and sinogram containers shared by all modules.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace grrecon {

// Regular voxel lattice. `origin` is the world-space position (mm) of the
// center of voxel (0,0,0); voxel (i,j,k) is centered at origin + (i,j,k)*voxel_size.
struct Grid {
    std::array<int, 3> dims{0, 0, 0};                 // nx, ny, nz
    std::array<double, 3> voxel_size{1.0, 1.0, 1.0};  // mm
    std::array<double, 3> origin{0.0, 0.0, 0.0};      // mm

    Grid() = default;
    Grid(int nx, int ny, int nz, double sx = 1.0, double sy = 1.0, double sz = 1.0,
         double ox = 0.0, double oy = 0.0, double oz = 0.0)
        : dims{nx, ny, nz}, voxel_size{sx, sy, sz}, origin{ox, oy, oz} {}

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }

    // x-fastest linear index.
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
    }

    bool contains(int x, int y, int z) const {
        return x >= 0 && x < dims[0] && y >= 0 && y < dims[1] && z >= 0 && z < dims[2];
    }

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (dims[a] < 1)
                throw std::invalid_argument("Grid: dims must be >= 1 in every axis");
            if (!(voxel_size[a] > 0.0))
                throw std::invalid_argument("Grid: voxel_size must be > 0 in every axis");
        }
    }

    bool operator==(const Grid& o) const {
        return dims == o.dims && voxel_size == o.voxel_size && origin == o.origin;
    }
};

// Dense scalar field on a Grid, x-fastest ordering. Activity images are
// nonnegative after rasterization clamping; diffusion states may be negative.
struct Volume {
    Grid grid;
    std::vector<float> data;

    Volume() = default;
    explicit Volume(const Grid& g, float fill = 0.0f) : grid(g), data(g.voxel_count(), fill) {}

    float& at(int x, int y, int z) { return data[grid.index(x, y, z)]; }
    float at(int x, int y, int z) const { return data[grid.index(x, y, z)]; }

    std::size_t size() const { return data.size(); }

    void validate() const {
        grid.validate();
        if (data.size() != grid.voxel_count())
            throw std::invalid_argument("Volume: data length does not match grid dims");
    }
};

// Projection-domain measurements for a stack of direct-plane parallel-beam
// sinograms. Layout: detector bin fastest, then angle, then axial slice.
struct Sinogram {
    int n_angles = 0;
    int n_det = 0;
    int n_slices = 0;
    std::vector<double> angles;  // radians, in [0, pi)
    double det_spacing = 1.0;    // mm
    std::vector<float> data;

    Sinogram() = default;
    Sinogram(int angles_, int det_, int slices_, std::vector<double> angle_values, double spacing)
        : n_angles(angles_), n_det(det_), n_slices(slices_), angles(std::move(angle_values)),
          det_spacing(spacing), data(static_cast<std::size_t>(angles_) * det_ * slices_, 0.0f) {}

    std::size_t bin_count() const {
        return static_cast<std::size_t>(n_angles) * static_cast<std::size_t>(n_det) *
               static_cast<std::size_t>(n_slices);
    }

    std::size_t index(int angle, int det, int slice) const {
        return static_cast<std::size_t>(det) +
               static_cast<std::size_t>(n_det) *
                   (static_cast<std::size_t>(angle) + static_cast<std::size_t>(n_angles) * static_cast<std::size_t>(slice));
    }

    float& at(int angle, int det, int slice) { return data[index(angle, det, slice)]; }
    float at(int angle, int det, int slice) const { return data[index(angle, det, slice)]; }

    void validate() const {
        if (n_angles < 1 || n_det < 1 || n_slices < 1)
            throw std::invalid_argument("Sinogram: all counts must be >= 1");
        if (angles.size() != static_cast<std::size_t>(n_angles))
            throw std::invalid_argument("Sinogram: angles length does not match n_angles");
        if (data.size() != bin_count())
            throw std::invalid_argument("Sinogram: data length inconsistent with counts");
        if (!(det_spacing > 0.0))
            throw std::invalid_argument("Sinogram: det_spacing must be > 0");
    }

    bool same_geometry(const Sinogram& o) const {
        return n_angles == o.n_angles && n_det == o.n_det && n_slices == o.n_slices &&
               angles == o.angles && det_spacing == o.det_spacing;
    }
};

}  // namespace grrecon
