#include "mhgs/importance.hpp"

#include "mhgs/ssim.hpp"

#include <algorithm>
#include <cmath>

namespace mhgs {

int subset_size(const CameraSchedule& schedule, int t) {
    if (schedule.t_min >= schedule.t_max)
        throw contract_error("camera_subset: require t_min < t_max");
    if (t < schedule.t_min || t > schedule.t_max)
        throw contract_error("camera_subset: t outside the densification window");
    const Scalar eta = static_cast<Scalar>(t - schedule.t_min) /
                       static_cast<Scalar>(schedule.t_max - schedule.t_min);
    const int k = static_cast<int>(std::floor((1.0 - eta) * schedule.full_set_size));
    return std::max(1, k);
}

std::vector<int> camera_subset(CameraSchedule& schedule, int t) {
    if (schedule.full_set_size <= 0)
        throw contract_error("camera_subset: empty camera set");
    const int k = subset_size(schedule, t);
    std::vector<int> indices(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
        indices[static_cast<std::size_t>(j)] = (schedule.cursor + j) % schedule.full_set_size;
    schedule.cursor = (schedule.cursor + k) % schedule.full_set_size;
    return indices;
}

AggregateMaps aggregate_error_maps(const std::vector<const ImageBuffer*>& renders,
                                   const std::vector<const ImageBuffer*>& targets) {
    if (renders.empty() || renders.size() != targets.size())
        throw contract_error("aggregate_error_maps: empty or mismatched view lists");
    const ImageBuffer& first = *targets.front();
    AggregateMaps maps;
    maps.ssim_agg = PixelMap::Zero(first.height, first.width);
    maps.l1_agg = PixelMap::Zero(first.height, first.width);
    for (std::size_t v = 0; v < renders.size(); ++v) {
        if (!renders[v]->same_resolution(first) || !targets[v]->same_resolution(first))
            throw contract_error("aggregate_error_maps: resolution mismatch across views");
        maps.ssim_agg += 1.0 - ssim_map(*renders[v], *targets[v]);
        maps.l1_agg += l1_map(*renders[v], *targets[v]);
    }
    const Scalar inv_k = 1.0 / static_cast<Scalar>(renders.size());
    maps.ssim_agg *= inv_k;
    maps.l1_agg *= inv_k;
    return maps;
}

PixelMap robust_normalize(const PixelMap& map) {
    if (map.size() == 0) throw contract_error("robust_normalize: empty map");
    std::vector<Scalar> values(map.data(), map.data() + map.size());
    std::sort(values.begin(), values.end());
    const auto percentile = [&](Scalar q) {
        const auto pos = static_cast<std::size_t>(std::llround(
            q / 100.0 * static_cast<Scalar>(values.size() - 1)));
        return values[std::min(pos, values.size() - 1)];
    };
    const Scalar lo = percentile(1.0);
    const Scalar hi = percentile(99.0);
    if (!(hi - lo > 0.0)) return PixelMap::Zero(map.rows(), map.cols());
    return ((map.min(hi).max(lo)) - lo) / (hi - lo);
}

PixelMap importance_field(const PixelMap& opacity_term, const PixelMap& ssim_agg,
                          const PixelMap& l1_agg, const ImportanceWeights& weights) {
    if (opacity_term.rows() != ssim_agg.rows() || opacity_term.cols() != ssim_agg.cols() ||
        opacity_term.rows() != l1_agg.rows() || opacity_term.cols() != l1_agg.cols())
        throw contract_error("importance_field: resolution mismatch");
    PixelMap z = weights.alpha * opacity_term + weights.beta * ssim_agg + weights.gamma * l1_agg;
    return z.unaryExpr([](Scalar v) { return logistic(v); });
}

ImportanceField gaussian_importance(const GaussianCloud& cloud, PixelMap s_map,
                                    const Camera& reference_camera) {
    if (cloud.empty()) throw contract_error("gaussian_importance: empty cloud");
    if (s_map.rows() != reference_camera.height || s_map.cols() != reference_camera.width)
        throw contract_error("gaussian_importance: s_map does not match the reference camera");

    ImportanceField field;
    field.reference_camera = reference_camera;
    const Scalar s_min = s_map.minCoeff();
    const auto n = static_cast<Eigen::Index>(cloud.size());
    field.per_gaussian.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 cam = reference_camera.to_camera(cloud.splats[static_cast<std::size_t>(i)].position);
        Scalar value = s_min;
        if (cam.z() >= reference_camera.near_plane) {
            const Vec2 u = reference_camera.project_camera_point(cam);
            const int px = static_cast<int>(std::floor(u.x()));
            const int py = static_cast<int>(std::floor(u.y()));
            if (px >= 0 && px < reference_camera.width && py >= 0 && py < reference_camera.height)
                value = s_map(py, px);
        }
        field.per_gaussian[i] = value;
    }
    field.p_pick = field.per_gaussian / field.per_gaussian.sum();
    field.s_map = std::move(s_map);
    return field;
}

}  // namespace mhgs
