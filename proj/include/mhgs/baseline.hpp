#pragma once

#include "mhgs/splat.hpp"

#include <cstdint>
#include <vector>

namespace mhgs {

/// Threshold-based adaptive density control (clone / split / prune), kept as
/// the comparison strategy behind the same densification interface.
struct BaselineConfig {
    Scalar grad_threshold = 2e-4;      // on the accumulated view-space positional gradient
    Scalar size_threshold_frac = 0.01; // of the scene extent
    Scalar opacity_prune = 0.005;
    Scalar split_scale_factor = 1.6;
    std::size_t max_gaussians = 0;     // 0 = unlimited; growth stops at the cap
};

/// Per-splat view-space gradient statistics accumulated between steps.
struct GradAccum {
    std::vector<Scalar> norm_sum;    // ||dL/dmean2d|| in NDC units
    std::vector<Vec3> world_sum;     // world-space position gradient
    std::vector<int> count;

    void grow_to(std::size_t n) {
        norm_sum.resize(n, 0.0);
        world_sum.resize(n, Vec3::Zero());
        count.resize(n, 0);
    }
    void reset() {
        std::fill(norm_sum.begin(), norm_sum.end(), 0.0);
        std::fill(world_sum.begin(), world_sum.end(), Vec3::Zero());
        std::fill(count.begin(), count.end(), 0);
    }
    void compact(const std::vector<std::uint8_t>& keep_mask);
};

struct BaselineReport {
    int pruned = 0;
    int cloned = 0;
    int split = 0;
    std::vector<std::uint8_t> keep_mask;  // over the pre-step indices
    std::size_t appended = 0;             // new splats at the end of the cloud
};

/// Prunes splats below the opacity threshold; among high-gradient splats,
/// clones small ones (shifting the copy along the descent direction) and
/// splits large ones into two with scales / split_scale_factor.
BaselineReport baseline_threshold_densify(GaussianCloud& cloud, const GradAccum& accum,
                                          const BaselineConfig& config, Scalar extent,
                                          Rng& rng);

}  // namespace mhgs
