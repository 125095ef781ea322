#include "mhgs/splat.hpp"

namespace mhgs {

Mat3 covariance_from_scale_rotation(const Vec3& scale, const Quat& rotation) {
    if (!scale.allFinite() || !rotation.coeffs().allFinite())
        throw contract_error("covariance_from_scale_rotation: non-finite inputs");
    if ((scale.array() <= 0.0).any())
        throw contract_error("covariance_from_scale_rotation: scale must be positive");
    const Mat3 r = rotation.normalized().toRotationMatrix();
    return r * scale.array().square().matrix().asDiagonal() * r.transpose();
}

namespace {

void check_finite(const GaussianSplat& splat, std::size_t index, ValidationReport& report) {
    auto flag = [&](const char* field) {
        report.issues.push_back({index, field, "non-finite value"});
    };
    if (!splat.position.allFinite()) flag("position");
    if (!splat.raw_scale.allFinite()) flag("raw_scale");
    if (!splat.rotation.coeffs().allFinite()) flag("rotation");
    if (!splat.color.allFinite()) flag("color");
    if (!std::isfinite(splat.raw_opacity)) flag("raw_opacity");
}

}  // namespace

ValidationReport validate_cloud(const GaussianCloud& cloud) {
    ValidationReport report;
    for (std::size_t i = 0; i < cloud.splats.size(); ++i) {
        const GaussianSplat& s = cloud.splats[i];
        check_finite(s, i, report);
        if (s.rotation.coeffs().allFinite()) {
            const Scalar norm = s.rotation.norm();
            if (std::abs(norm - 1.0) > 1e-6)
                report.issues.push_back({i, "rotation", "quaternion norm deviates from 1"});
        }
        if (std::isfinite(s.raw_opacity)) {
            const Scalar alpha = s.opacity();
            if (!(alpha > 0.0 && alpha < 1.0))
                report.issues.push_back({i, "raw_opacity", "activated opacity saturated"});
        }
        if (s.color.allFinite()) {
            if ((s.color.array() < 0.0).any() || (s.color.array() > 1.0).any())
                report.issues.push_back({i, "color", "outside [0,1]"});
        }
    }
    return report;
}

std::pair<Vec3, Vec3> cloud_bounds(const GaussianCloud& cloud) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<Scalar>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<Scalar>::lowest());
    for (const auto& s : cloud.splats) {
        lo = lo.cwiseMin(s.position);
        hi = hi.cwiseMax(s.position);
    }
    return {lo, hi};
}

}  // namespace mhgs
