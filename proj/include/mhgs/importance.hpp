#pragma once

#include "mhgs/camera.hpp"
#include "mhgs/image.hpp"
#include "mhgs/splat.hpp"

#include <vector>

namespace mhgs {

/// Round-robin camera scheduling with an annealed subset size:
/// k_t = max(1, floor((1 - eta_t) |C|)), eta_t = (t - t_min)/(t_max - t_min).
struct CameraSchedule {
    int full_set_size = 0;
    int cursor = 0;
    int t_min = 0;
    int t_max = 1;
};

int subset_size(const CameraSchedule& schedule, int t);

/// Next contiguous block of k_t indices starting at the cursor (wrapping);
/// advances the cursor by k_t. Throws when t leaves [t_min, t_max].
std::vector<int> camera_subset(CameraSchedule& schedule, int t);

struct AggregateMaps {
    PixelMap ssim_agg;  // mean (1 - SSIM) over the subset
    PixelMap l1_agg;    // mean channel-average |I - Ihat| over the subset
};

AggregateMaps aggregate_error_maps(const std::vector<const ImageBuffer*>& renders,
                                   const std::vector<const ImageBuffer*>& targets);

/// Clips at the 1st/99th percentiles and rescales to [0,1]; constant maps
/// collapse to all-zeros.
PixelMap robust_normalize(const PixelMap& map);

struct ImportanceWeights {
    Scalar alpha = 0.8;  // opacity term
    Scalar beta = 0.5;   // SSIM term
    Scalar gamma = 0.5;  // L1 term
};

/// s(p) = logistic(alpha O(p) + beta ssim_agg(p) + gamma l1_agg(p)).
/// Inputs are expected normalized to [0,1].
PixelMap importance_field(const PixelMap& opacity_term, const PixelMap& ssim_agg,
                          const PixelMap& l1_agg, const ImportanceWeights& weights = {});

/// Per-splat importance and the categorical pick distribution over splats.
struct ImportanceField {
    PixelMap s_map;
    Camera reference_camera;
    Eigen::VectorXd per_gaussian;  // I(i) in (0,1)
    Eigen::VectorXd p_pick;        // normalized, sums to 1
};

/// I(i) = s(floor(projection of splat center)); splats projecting outside the
/// image or behind the camera receive the field minimum so the categorical
/// keeps full support.
ImportanceField gaussian_importance(const GaussianCloud& cloud, PixelMap s_map,
                                    const Camera& reference_camera);

}  // namespace mhgs
