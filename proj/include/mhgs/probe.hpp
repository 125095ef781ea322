#pragma once

#include "mhgs/loss.hpp"
#include "mhgs/sampler.hpp"
#include "mhgs/synth.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace mhgs {

/// Photometric loss ((1-lambda) L1 + lambda D-SSIM, no regularizers) averaged
/// over the given views. The delta of this quantity under an insertion is the
/// delta_loss fed to delta_energy_insert.
Scalar photometric_loss_over_views(const GaussianCloud& cloud,
                                   const std::vector<const Camera*>& cameras,
                                   const std::vector<const ImageBuffer*>& targets,
                                   const LossWeights& weights = {},
                                   const RenderSettings& settings = {});

struct CorrelationReport {
    bool applicable = false;                          // false when I(i) has no variance
    Scalar spearman_rho = 0.0;
    std::vector<std::pair<Scalar, Scalar>> samples;   // (I(i), -delta_loss)
};

/// Empirical test of the -delta_loss ~ I(i) surrogate: samples candidates
/// from the live proposal machinery, measures the true loss change by
/// rendering the view subset before and after each insertion, and reports the
/// Spearman rank correlation over the (I(i), -delta_loss) pairs.
CorrelationReport surrogate_correlation(const GaussianCloud& cloud,
                                        const std::vector<const Camera*>& cameras,
                                        const std::vector<const ImageBuffer*>& targets,
                                        const DensifyParams& params, int n_probes, Rng& rng,
                                        const LossWeights& weights = {},
                                        const RenderSettings& settings = {});

void write_scatter_csv(const CorrelationReport& report, const std::filesystem::path& path);

}  // namespace mhgs
