// noise.hpp - Poisson dose-reduction model for sinogram counts.
#pragma once

#include <cstdint>

#include "grrecon/types.hpp"

namespace grrecon {

// Low-dose model: every bin is independently resampled as drf * Poisson(y/drf),
// which preserves the expectation while scaling the variance by drf. Seeded and
// reproducible; drf = 1 is plain Poisson resampling at the original scale.
Sinogram apply_dose_reduction(const Sinogram& sino, double drf, std::uint64_t seed);

}  // namespace grrecon
