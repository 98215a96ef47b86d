#include "grrecon/noise.hpp"

#include <random>

#include "grrecon/rng.hpp"

namespace grrecon {

Sinogram apply_dose_reduction(const Sinogram& sino, double drf, std::uint64_t seed) {
    sino.validate();
    if (!(drf >= 1.0))
        throw std::invalid_argument("apply_dose_reduction: drf must be >= 1");
    for (float v : sino.data)
        if (v < 0.0f)
            throw std::invalid_argument("apply_dose_reduction: input bins must be >= 0");

    Sinogram out = sino;
    auto rng = make_engine(seed);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double mean = static_cast<double>(sino.data[i]) / drf;
        if (mean <= 0.0) {
            out.data[i] = 0.0f;
            continue;
        }
        std::poisson_distribution<long long> poisson(mean);
        out.data[i] = static_cast<float>(drf * static_cast<double>(poisson(rng)));
    }
    return out;
}

}  // namespace grrecon
