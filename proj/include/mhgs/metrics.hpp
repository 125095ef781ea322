#pragma once

#include "mhgs/image.hpp"
#include "mhgs/splat.hpp"
#include "mhgs/synth.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace mhgs {

/// One metrics.csv row; the schema is identical for every densify strategy.
struct MetricsRow {
    int iter = 0;
    Scalar loss = 0.0;
    Scalar l1 = 0.0;
    Scalar dssim = 0.0;
    Scalar psnr_train = 0.0;
    std::size_t n_gaussians = 0;
    int births = 0;
    int relocations = 0;
    Scalar accept_coarse = 0.0;
    Scalar accept_fine = 0.0;
    Scalar seconds = 0.0;
};

/// 10 log10(1/MSE) for unit-range images, capped at 100 dB.
Scalar psnr(const ImageBuffer& a, const ImageBuffer& b);

struct EvalReport {
    std::vector<int> view_indices;  // test views
    std::vector<Scalar> view_psnr;
    std::vector<Scalar> view_ssim;
    Scalar mean_psnr = 0.0;
    Scalar mean_ssim = 0.0;
    std::size_t n_gaussians = 0;
    std::int64_t iteration_at_98pct = -1;  // -1 when no metrics log was given
    std::size_t storage_bytes = 0;
};

/// Renders every test view and scores it against the targets.
EvalReport evaluate(const GaussianCloud& cloud, const Dataset& dataset,
                    const std::vector<MetricsRow>* metrics_log = nullptr,
                    const RenderSettings& settings = {});

/// First iteration whose train PSNR reaches 98% of the final row's value.
std::int64_t convergence_point(const std::vector<MetricsRow>& metrics);

/// Same, parsed from a metrics CSV file; malformed rows raise io_error with
/// the offending line number.
std::int64_t convergence_point_csv(const std::filesystem::path& csv_path);

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& csv_path);
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);

/// Spearman rank correlation with average-rank tie handling; nullopt when
/// either input has zero rank variance.
std::optional<Scalar> spearman(const std::vector<Scalar>& xs, const std::vector<Scalar>& ys);

}  // namespace mhgs
