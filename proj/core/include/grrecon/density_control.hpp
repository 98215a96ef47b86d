// density_control.hpp - periodic prune/clone/split of the Gaussian set driven
// by gradient statistics, with bookkeeping that lets the optimizer remap
// per-Gaussian state across events.
#pragma once

#include <cstddef>
#include <vector>

#include "grrecon/gaussian_cloud.hpp"
#include "grrecon/types.hpp"

namespace grrecon {

struct DensityControlConfig {
    double tau_prune = 1e-7;   // |dL/dI| below this counts toward pruning
    double tau_clone = 2e-4;   // ||dL/dmu|| above this requests a clone
    double tau_split = 0.01;   // sigma above tau_split * (grid diagonal in voxels) splits
    int interval = 100;        // optimizer iterations between control steps
    int persistence = 3;       // consecutive low-gradient control steps before pruning
    std::size_t max_gaussians = 5000;
    double split_sigma_factor = 1.0 / 1.6;

    void validate() const;
};

// Result of one control step. `src[j]` is the index in the previous cloud the
// j-th Gaussian derives from; `fresh[j]` is 1 for newly created clones and
// split children (their optimizer state should start cold), 0 for survivors.
struct DensityControlOutcome {
    GaussianCloud cloud;
    std::vector<std::size_t> src;
    std::vector<char> fresh;
    std::size_t pruned = 0;
    std::size_t split = 0;
    std::size_t cloned = 0;
    std::size_t dropped = 0;  // clone/split requests refused by the cap
};

// Stateful controller: tracks, per Gaussian, how many consecutive control
// steps had |dL/dI| < tau_prune. One step applies, in order:
//   1. prune Gaussians whose low-gradient streak reached `persistence`;
//   2. split survivors with sigma > tau_split * grid diagonal into two
//      children (sigma * split_sigma_factor, centers mu +- sigma/2 along the
//      axis of largest |dL/dmu| component, intensities halved);
//   3. clone remaining survivors with ||dL/dmu|| > tau_clone (copy offset by
//      one sigma along the gradient direction).
// The cloud size never exceeds max_gaussians; refused requests are counted.
class DensityController {
public:
    DensityController(std::size_t initial_count, const DensityControlConfig& cfg);

    DensityControlOutcome step(const GaussianCloud& cloud, const ParamGrads& grads,
                               const Grid& grid);

    const std::vector<int>& streaks() const { return streak_; }

private:
    DensityControlConfig cfg_;
    std::vector<int> streak_;
};

}  // namespace grrecon
