#include "mhgs/probe.hpp"

#include "mhgs/metrics.hpp"
#include "mhgs/ssim.hpp"

#include <fstream>

namespace mhgs {

Scalar photometric_loss_over_views(const GaussianCloud& cloud,
                                   const std::vector<const Camera*>& cameras,
                                   const std::vector<const ImageBuffer*>& targets,
                                   const LossWeights& weights,
                                   const RenderSettings& settings) {
    if (cameras.empty() || cameras.size() != targets.size())
        throw contract_error("photometric_loss_over_views: camera/target mismatch");
    Scalar total = 0.0;
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const RenderOutput out = render(cloud, *cameras[v], settings);
        const Scalar l1 = mean_abs_error(out.image, *targets[v]);
        const Scalar dssim = (1.0 - ssim_map(out.image, *targets[v])).mean();
        total += (1.0 - weights.lambda) * l1 + weights.lambda * dssim;
    }
    return total / static_cast<Scalar>(cameras.size());
}

CorrelationReport surrogate_correlation(const GaussianCloud& cloud,
                                        const std::vector<const Camera*>& cameras,
                                        const std::vector<const ImageBuffer*>& targets,
                                        const DensifyParams& params, int n_probes, Rng& rng,
                                        const LossWeights& weights,
                                        const RenderSettings& settings) {
    if (n_probes < 2) throw contract_error("surrogate_correlation: need at least 2 probes");

    const ErrorMaps maps = compute_error_maps(cloud, cameras, targets, settings);
    const ImportanceField field = importance_from_maps(cloud, maps, *cameras.front(), params);

    // probe with both proposal radii, mirroring the live sampler
    std::vector<ProposalCandidate> probes =
        propose_batch(cloud, field, params.sigma_coarse, n_probes / 2, ProposalPhase::coarse,
                      rng);
    std::vector<ProposalCandidate> fine =
        propose_batch(cloud, field, params.sigma_fine, n_probes - n_probes / 2,
                      ProposalPhase::fine, rng);
    probes.insert(probes.end(), fine.begin(), fine.end());

    const Scalar base_loss =
        photometric_loss_over_views(cloud, cameras, targets, weights, settings);

    CorrelationReport report;
    report.samples.reserve(probes.size());
    GaussianCloud scratch = cloud;
    for (const auto& probe : probes) {
        scratch.splats.push_back(probe.new_splat);
        const Scalar inserted_loss =
            photometric_loss_over_views(scratch, cameras, targets, weights, settings);
        scratch.splats.pop_back();
        report.samples.emplace_back(probe.importance, -(inserted_loss - base_loss));
    }

    std::vector<Scalar> xs, ys;
    for (const auto& [imp, gain] : report.samples) {
        xs.push_back(imp);
        ys.push_back(gain);
    }
    const std::optional<Scalar> rho = spearman(xs, ys);
    report.applicable = rho.has_value();
    report.spearman_rho = rho.value_or(0.0);
    return report;
}

void write_scatter_csv(const CorrelationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("write_scatter_csv: cannot open " + path.string());
    out << "importance,neg_delta_loss\n";
    char buf[96];
    for (const auto& [imp, gain] : report.samples) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", imp, gain);
        out << buf;
    }
}

}  // namespace mhgs
