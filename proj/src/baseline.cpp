#include "mhgs/baseline.hpp"

#include <algorithm>

namespace mhgs {

void GradAccum::compact(const std::vector<std::uint8_t>& keep_mask) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < keep_mask.size(); ++i) {
        if (!keep_mask[i]) continue;
        norm_sum[out] = norm_sum[i];
        world_sum[out] = world_sum[i];
        count[out] = count[i];
        ++out;
    }
    norm_sum.resize(out);
    world_sum.resize(out);
    count.resize(out);
}

BaselineReport baseline_threshold_densify(GaussianCloud& cloud, const GradAccum& accum,
                                          const BaselineConfig& config, Scalar extent,
                                          Rng& rng) {
    if (accum.norm_sum.size() != cloud.size())
        throw contract_error("baseline_threshold_densify: gradient accumulators missing");

    const std::size_t n = cloud.size();
    BaselineReport report;
    report.keep_mask.assign(n, 1);

    const Scalar size_threshold = config.size_threshold_frac * extent;

    // decide on the pre-step snapshot, then rebuild the cloud
    std::vector<GaussianSplat> grown;
    for (std::size_t i = 0; i < n; ++i) {
        const GaussianSplat& s = cloud.splats[i];
        if (s.opacity() < config.opacity_prune) {
            report.keep_mask[i] = 0;
            ++report.pruned;
            continue;
        }
        if (accum.count[i] == 0) continue;
        const Scalar avg_grad = accum.norm_sum[i] / accum.count[i];
        if (avg_grad <= config.grad_threshold) continue;

        const std::size_t projected_size =
            n - static_cast<std::size_t>(report.pruned) + grown.size();
        if (config.max_gaussians > 0 && projected_size >= config.max_gaussians) continue;

        const Vec3 scale = s.scale();
        if (scale.mean() < size_threshold) {
            // under-reconstruction: clone, shifting the copy down the gradient
            GaussianSplat clone = s;
            const Vec3 dir = accum.world_sum[i] / accum.count[i];
            if (dir.norm() > 0.0)
                clone.position -= dir.normalized() * (0.05 * scale.mean());
            grown.push_back(std::move(clone));
            ++report.cloned;
        } else {
            // over-reconstruction: replace with two smaller samples of itself
            report.keep_mask[i] = 0;
            ++report.split;
            const Mat3 rot = s.rotation.toRotationMatrix();
            for (int child = 0; child < 2; ++child) {
                GaussianSplat part = s;
                part.position = s.position + rot * (scale.cwiseProduct(rng.normal3()));
                part.raw_scale = s.raw_scale.array() - std::log(config.split_scale_factor);
                grown.push_back(std::move(part));
            }
        }
    }

    std::vector<GaussianSplat> next;
    next.reserve(n + grown.size());
    for (std::size_t i = 0; i < n; ++i)
        if (report.keep_mask[i]) next.push_back(cloud.splats[i]);
    for (auto& s : grown) next.push_back(std::move(s));
    report.appended = grown.size();
    cloud.splats = std::move(next);
    return report;
}

}  // namespace mhgs
