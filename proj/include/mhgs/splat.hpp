#pragma once

#include "mhgs/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mhgs {

/// One anisotropic 3D Gaussian primitive. Scale is stored in log space and
/// opacity in logit space; optimizer updates act on the raw values so the
/// activated quantities stay in their valid ranges by construction.
struct GaussianSplat {
    Vec3 position = Vec3::Zero();
    Vec3 raw_scale = Vec3::Zero();            // activated scale = exp(raw_scale)
    Quat rotation = Quat::Identity();         // unit quaternion
    Vec3 color = Vec3::Constant(0.5);         // plain RGB (view independent)
    Scalar raw_opacity = 0.0;                 // activated opacity = logistic(raw_opacity)

    Vec3 scale() const { return raw_scale.array().exp(); }
    Scalar opacity() const { return logistic(raw_opacity); }

    void set_scale(const Vec3& s) { raw_scale = s.array().log(); }
    void set_opacity(Scalar alpha) { raw_opacity = logit(alpha); }
};

/// The scene state: an ordered splat list plus the training-step counter.
struct GaussianCloud {
    std::vector<GaussianSplat> splats;
    std::uint64_t iteration = 0;
    std::uint64_t rng_seed = 0;

    std::size_t size() const { return splats.size(); }
    bool empty() const { return splats.empty(); }
};

/// Sigma = R * S * S^T * R^T from an activated scale and a unit quaternion.
/// The result is symmetric positive definite for positive scales.
Mat3 covariance_from_scale_rotation(const Vec3& scale, const Quat& rotation);

struct ValidationIssue {
    std::size_t splat_index = 0;
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

/// Reports every invariant violation in the cloud (non-finite parameters,
/// non-unit quaternions, saturated opacities, out-of-range colors).
ValidationReport validate_cloud(const GaussianCloud& cloud);

/// Axis-aligned bounding box of splat centers; (min, max) pair.
std::pair<Vec3, Vec3> cloud_bounds(const GaussianCloud& cloud);

}  // namespace mhgs
