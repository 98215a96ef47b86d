#include "grrecon/phantom.hpp"

#include "grrecon/parallel.hpp"

namespace grrecon {

void PhantomSpec::validate() const {
    grid.validate();
    for (const auto& e : shapes)
        for (int a = 0; a < 3; ++a)
            if (!(e.semi_axes[a] > 0.0))
                throw std::invalid_argument("PhantomSpec: ellipsoid semi-axes must be > 0");
}

Volume create_phantom(const PhantomSpec& spec) {
    spec.validate();
    Volume out(spec.grid, static_cast<float>(spec.background));
    const auto& g = spec.grid;

    parallel_for(g.dims[2], [&](std::int64_t z) {
        const double wz = g.origin[2] + static_cast<double>(z) * g.voxel_size[2];
        for (int y = 0; y < g.dims[1]; ++y) {
            const double wy = g.origin[1] + y * g.voxel_size[1];
            for (int x = 0; x < g.dims[0]; ++x) {
                const double wx = g.origin[0] + x * g.voxel_size[0];
                double v = 0.0;
                for (const auto& e : spec.shapes) {
                    const double dx = (wx - e.center[0]) / e.semi_axes[0];
                    const double dy = (wy - e.center[1]) / e.semi_axes[1];
                    const double dz = (wz - e.center[2]) / e.semi_axes[2];
                    if (dx * dx + dy * dy + dz * dz <= 1.0)
                        v += e.intensity;
                }
                if (v != 0.0)
                    out.data[g.index(static_cast<int>(x), y, static_cast<int>(z))] +=
                        static_cast<float>(v);
            }
        }
    });
    return out;
}

}  // namespace grrecon
