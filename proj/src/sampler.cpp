#include "mhgs/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mhgs {

namespace {

/// Inverse-CDF categorical sampling; draws are i.i.d. (with replacement).
class Categorical {
public:
    explicit Categorical(const Eigen::VectorXd& weights) : cdf_(weights.size()) {
        Scalar acc = 0.0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            cdf_[static_cast<std::size_t>(i)] = acc;
        }
        total_ = acc;
    }

    int draw(Rng& rng) const {
        const Scalar u = rng.uniform() * total_;
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto idx = static_cast<std::size_t>(it - cdf_.begin());
        return static_cast<int>(std::min(idx, cdf_.size() - 1));
    }

private:
    std::vector<Scalar> cdf_;
    Scalar total_ = 0.0;
};

Scalar log_normal3_pdf(const Vec3& x, Scalar sigma) {
    return -3.0 * std::log(sigma) - 1.5 * std::log(2.0 * M_PI) -
           0.5 * x.squaredNorm() / (sigma * sigma);
}

}  // namespace

std::vector<ProposalCandidate> propose_batch(const GaussianCloud& cloud,
                                             const ImportanceField& field, Scalar sigma,
                                             int batch_size, ProposalPhase phase, Rng& rng) {
    if (!(sigma > 0.0)) throw contract_error("propose_batch: sigma must be positive");
    if (batch_size < 0) throw contract_error("propose_batch: negative batch size");
    // the field may cover a prefix of the cloud: births within the current
    // step are not proposal parents
    if (field.p_pick.size() == 0 ||
        field.p_pick.size() > static_cast<Eigen::Index>(cloud.size()))
        throw contract_error("propose_batch: importance field does not match the cloud");

    const Categorical pick(field.p_pick);
    std::vector<ProposalCandidate> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int b = 0; b < batch_size; ++b) {
        ProposalCandidate cand;
        cand.parent_index = pick.draw(rng);
        cand.phase = phase;
        cand.offset = sigma * rng.normal3();
        cand.new_splat = cloud.splats[static_cast<std::size_t>(cand.parent_index)];
        cand.new_splat.position += cand.offset;
        cand.importance = field.per_gaussian[cand.parent_index];
        cand.log_q = std::log(field.p_pick[cand.parent_index]) +
                     log_normal3_pdf(cand.offset, sigma);
        batch.push_back(std::move(cand));
    }
    return batch;
}

bool accept_candidate(ProposalCandidate& candidate, GaussianCloud& cloud, VoxelGrid& grid,
                      Scalar lambda_v, Rng& rng) {
    const VoxelKey cell = voxel_index(candidate.new_splat.position, grid.voxel_size);
    const std::int64_t count_before = grid.count_at(cell);
    candidate.voxel_factor = 1.0 / (1.0 + lambda_v * static_cast<Scalar>(count_before));
    candidate.rho = logistic(candidate.importance) * candidate.voxel_factor;
    const bool accepted = rng.uniform() < candidate.rho;
    if (accepted) {
        cloud.splats.push_back(candidate.new_splat);
        grid.increment(cell);
    }
    return accepted;
}

RelocationReport relocate(GaussianCloud& cloud, Scalar tau, Rng& rng) {
    RelocationReport report;
    std::vector<int> dead;
    std::vector<int> alive;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        (cloud.splats[i].opacity() <= tau ? dead : alive).push_back(static_cast<int>(i));
    if (dead.empty()) return report;
    if (alive.empty()) {
        report.no_alive_warning = true;
        return report;
    }

    Eigen::VectorXd alive_alpha(static_cast<Eigen::Index>(alive.size()));
    for (std::size_t j = 0; j < alive.size(); ++j)
        alive_alpha[static_cast<Eigen::Index>(j)] =
            cloud.splats[static_cast<std::size_t>(alive[j])].opacity();
    const Categorical pick(alive_alpha);

    // draw every target first so the grouping is independent of apply order
    std::map<int, std::vector<int>> receivers_by_target;
    for (const int dead_index : dead) {
        const int target = alive[static_cast<std::size_t>(pick.draw(rng))];
        receivers_by_target[target].push_back(dead_index);
        report.moves.push_back({dead_index, target});
    }

    for (const auto& [target, receivers] : receivers_by_target) {
        const GaussianSplat source = cloud.splats[static_cast<std::size_t>(target)];
        const Scalar m = static_cast<Scalar>(receivers.size());
        const Scalar shared_alpha =
            1.0 - std::pow(1.0 - source.opacity(), 1.0 / (m + 1.0));
        const Scalar shared_raw = logit(shared_alpha);
        cloud.splats[static_cast<std::size_t>(target)].raw_opacity = shared_raw;
        for (const int r : receivers) {
            GaussianSplat& dst = cloud.splats[static_cast<std::size_t>(r)];
            dst = source;
            dst.raw_opacity = shared_raw;
        }
    }
    return report;
}

ErrorMaps compute_error_maps(const GaussianCloud& cloud,
                             const std::vector<const Camera*>& cameras,
                             const std::vector<const ImageBuffer*>& targets,
                             const RenderSettings& settings) {
    if (cameras.empty() || cameras.size() != targets.size())
        throw contract_error("compute_error_maps: camera/target mismatch");
    ErrorMaps maps;
    std::vector<RenderOutput> renders;
    renders.reserve(cameras.size());
    maps.opacity_accum = PixelMap::Zero(cameras.front()->height, cameras.front()->width);
    for (const Camera* cam : cameras) {
        renders.push_back(render(cloud, *cam, settings));
        maps.opacity_accum += renders.back().accumulated_alpha;
    }
    maps.opacity_accum /= static_cast<Scalar>(cameras.size());
    std::vector<const ImageBuffer*> render_ptrs;
    for (const auto& r : renders) render_ptrs.push_back(&r.image);
    maps.agg = aggregate_error_maps(render_ptrs, targets);
    return maps;
}

ImportanceField importance_from_maps(const GaussianCloud& cloud, const ErrorMaps& maps,
                                     const Camera& reference, const DensifyParams& params) {
    const PixelMap opacity_term =
        params.opacity_mode == OpacityTermMode::deficit
            ? robust_normalize((1.0 - maps.opacity_accum).eval())
            : robust_normalize(maps.opacity_accum);
    PixelMap s_map = importance_field(opacity_term, robust_normalize(maps.agg.ssim_agg),
                                      robust_normalize(maps.agg.l1_agg), params.weights);
    return gaussian_importance(cloud, std::move(s_map), reference);
}

DensifyReport densification_step(GaussianCloud& cloud, const std::vector<Camera>& cameras,
                                 const std::vector<const ImageBuffer*>& targets,
                                 CameraSchedule& schedule, const DensifyParams& params,
                                 int t, Rng& rng, const RenderSettings& settings) {
    if (cameras.size() != targets.size() || cameras.empty())
        throw contract_error("densification_step: camera/target mismatch");
    if (schedule.full_set_size != static_cast<int>(cameras.size()))
        throw contract_error("densification_step: schedule does not match the camera set");

    DensifyReport report;
    report.t = t;

    const std::vector<int> subset = camera_subset(schedule, t);
    report.k_t = static_cast<int>(subset.size());

    std::vector<const Camera*> subset_cams;
    std::vector<const ImageBuffer*> subset_targets;
    for (const int v : subset) {
        subset_cams.push_back(&cameras[static_cast<std::size_t>(v)]);
        subset_targets.push_back(targets[static_cast<std::size_t>(v)]);
    }
    const Camera& reference = *subset_cams.front();
    const ErrorMaps maps = compute_error_maps(cloud, subset_cams, subset_targets, settings);

    if (params.relocation_enabled) {
        RelocationReport reloc = relocate(cloud, params.relocate_tau, rng);
        report.relocations = reloc.count();
        report.moves = std::move(reloc.moves);
    }

    const ImportanceField field = importance_from_maps(cloud, maps, reference, params);

    VoxelGrid grid = voxel_counts(cloud, params.voxel_size);

    const auto run_phase = [&](ProposalPhase phase, Scalar sigma, int batch_size, int& births,
                               Scalar& rate) {
        std::vector<ProposalCandidate> batch =
            propose_batch(cloud, field, sigma, batch_size, phase, rng);
        births = 0;
        for (auto& cand : batch) {
            if (accept_candidate(cand, cloud, grid, params.lambda_v, rng)) ++births;
            report.rho_min = std::min(report.rho_min, cand.rho);
            report.rho_max = std::max(report.rho_max, cand.rho);
        }
        rate = batch.empty() ? 0.0 : static_cast<Scalar>(births) / static_cast<Scalar>(batch.size());
    };

    run_phase(ProposalPhase::coarse, params.sigma_coarse, params.batch_coarse,
              report.births_coarse, report.accept_rate_coarse);
    run_phase(ProposalPhase::fine, params.sigma_fine, params.batch_fine,
              report.births_fine, report.accept_rate_fine);

    if (params.verify_grid) {
        const VoxelGrid recount = voxel_counts(cloud, params.voxel_size);
        if (recount.total != grid.total || recount.counts.size() != grid.counts.size())
            throw numerical_error("densification_step: incremental voxel counts diverged");
        for (const auto& [key, count] : recount.counts)
            if (grid.count_at(key) != count)
                throw numerical_error("densification_step: incremental voxel counts diverged");
    }

    if (params.keep_s_map) report.s_map = field.s_map;
    report.total_splats = cloud.size();
    return report;
}

}  // namespace mhgs
