// phantom.hpp - synthetic ellipsoid phantoms used as full-dose ground truth.
#pragma once

#include "grrecon/types.hpp"

namespace grrecon {

struct Ellipsoid {
    std::array<double, 3> center{0.0, 0.0, 0.0};     // mm, world space
    std::array<double, 3> semi_axes{1.0, 1.0, 1.0};  // mm, all > 0
    double intensity = 0.0;                          // additive
};

struct PhantomSpec {
    Grid grid;
    std::vector<Ellipsoid> shapes;
    double background = 0.0;

    void validate() const;
};

// Voxel value = background + sum of intensities of ellipsoids whose interior
// (boundary inclusive) contains the voxel center. Deterministic and additive
// over the shape list.
Volume create_phantom(const PhantomSpec& spec);

}  // namespace grrecon
