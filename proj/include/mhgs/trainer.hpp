#pragma once

#include "mhgs/adam.hpp"
#include "mhgs/baseline.hpp"
#include "mhgs/loss.hpp"
#include "mhgs/metrics.hpp"
#include "mhgs/sampler.hpp"
#include "mhgs/synth.hpp"

#include <filesystem>
#include <optional>

namespace mhgs {

enum class DensifyStrategy { none, mh, baseline };

struct TrainConfig {
    // run
    int iterations = 5000;
    std::uint64_t seed = 1;
    int threads = 1;
    DensifyStrategy strategy = DensifyStrategy::mh;
    bool white_background = false;

    // loss
    LossWeights loss_weights;
    Scalar lambda_v = 0.5;

    // densification window and cadence
    int densify_t_min = 500;
    int densify_t_max = 0;  // 0 resolves to 0.6 * iterations
    int densify_interval = 100;

    // annealed schedule endpoints. Schedule values are dimensionless; a
    // proposal scale of 10 means a world-space std of 10 * proposal_scale_to_extent
    // * extent, and voxel sizes scale directly with the extent.
    Scalar sigma_coarse_start = 10.0, sigma_coarse_end = 5.0;
    Scalar sigma_fine_start = 2.0, sigma_fine_end = 1.0;
    Scalar voxel_start = 0.02, voxel_end = 0.005;
    int batch_coarse = 4500;
    int batch_fine = 16000;
    Scalar batch_scale = 0.0062;  // desk-scale global scale-down on both batches
    Scalar proposal_scale_to_extent = 0.01;
    Scalar voxel_scale_to_extent = 3.0;  // world voxel = schedule value * this * extent
    bool sigma_in_voxels = true;   // proposal scales measured in voxels (schedule units
                                   // track the annealed voxel size); false = extent units

    // importance field
    ImportanceWeights importance_weights;
    OpacityTermMode opacity_mode = OpacityTermMode::deficit;

    // relocation
    bool relocation = true;
    Scalar relocate_tau = 0.005;

    // optimizer
    AdamConfig adam;
    Scalar lr_position = 1.6e-4;  // scaled by the scene extent
    Scalar lr_scale = 5e-3;
    Scalar lr_rotation = 1e-3;
    Scalar lr_color = 2.5e-3;
    Scalar lr_opacity = 5e-2;

    // initialization (used when train() gets no init cloud)
    int init_gaussians = 200;
    Scalar init_opacity = 0.3;
    Scalar init_scale_frac = 0.05;  // of the extent
    Scalar extent_override = 0.0;  // 0 = take the dataset's extent

    // baseline strategy
    BaselineConfig baseline;

    // io / debug
    int checkpoint_interval = 0;  // 0 = final checkpoint only
    bool verify_grid = false;
    bool dump_importance = false;

    int resolved_t_max() const {
        return densify_t_max > 0 ? densify_t_max
                                 : static_cast<int>(0.6 * static_cast<Scalar>(iterations));
    }
};

struct AnnealValues {
    Scalar sigma_coarse = 0.0;
    Scalar sigma_fine = 0.0;
    Scalar voxel_size = 0.0;
    int batch_coarse = 0;
    int batch_fine = 0;
};

/// Linear interpolation of the schedule endpoints on
/// progress = (t - t_min)/(t_max - t_min); t must lie inside the window.
AnnealValues anneal(const TrainConfig& config, int t);

/// Annealed schedule values mapped into world units for a given scene extent.
DensifyParams densify_params_at(const TrainConfig& config, int t, Scalar extent);

/// Versioned binary training snapshot; load -> save round-trips byte-identically.
struct Checkpoint {
    GaussianCloud cloud;
    AdamState adam;
    std::int32_t schedule_cursor = 0;
    std::uint64_t iteration = 0;
    std::array<std::uint64_t, 4> rng_state{};
};

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint checkpoint_load(const std::filesystem::path& path);

/// Sampler step report row (densify.csv).
struct DensifyRow {
    int iteration = 0;
    int k_t = 0;
    int births_coarse = 0;
    int births_fine = 0;
    Scalar accept_rate_coarse = 0.0;
    Scalar accept_rate_fine = 0.0;
    int relocations = 0;
    std::size_t total_splats = 0;
};

void write_densify_csv(const std::vector<DensifyRow>& rows,
                       const std::filesystem::path& path);

struct TrainIO {
    std::filesystem::path out_dir;      // empty: keep everything in memory
    std::filesystem::path resume_from;  // empty: fresh start
};

struct TrainResult {
    GaussianCloud cloud;
    std::vector<MetricsRow> metrics;
    std::vector<DensifyRow> densify_log;
    Scalar rho_min = 1.0;  // over every candidate of the whole run
    Scalar rho_max = 0.0;
    int densify_steps = 0;
};

/// The outer training loop: one shuffled round-robin view per iteration,
/// render / loss / backward / Adam, scheduled densification, metrics row per
/// iteration. Deterministic for a fixed seed at any thread count.
TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  std::optional<GaussianCloud> init = std::nullopt, const TrainIO& io = {});

}  // namespace mhgs
