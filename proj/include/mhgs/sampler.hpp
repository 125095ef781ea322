#pragma once

#include "mhgs/energy.hpp"
#include "mhgs/importance.hpp"
#include "mhgs/render.hpp"
#include "mhgs/voxel.hpp"

#include <vector>

namespace mhgs {

enum class ProposalPhase { coarse, fine };

/// A birth proposal: the parent's splat displaced by an isotropic normal
/// offset, inheriting every non-positional parameter.
struct ProposalCandidate {
    int parent_index = -1;
    ProposalPhase phase = ProposalPhase::coarse;
    Vec3 offset = Vec3::Zero();
    GaussianSplat new_splat;
    Scalar importance = 0.0;    // I(parent)
    Scalar voxel_factor = 0.0;  // D(v'), filled during acceptance
    Scalar rho = 0.0;           // acceptance probability, filled during acceptance
    Scalar log_q = 0.0;         // ln P_pick(parent) + ln N(offset; 0, sigma^2 I)
};

/// Draws `batch_size` parents i.i.d. from p_pick and perturbs each with an
/// isotropic normal of std `sigma`.
std::vector<ProposalCandidate> propose_batch(const GaussianCloud& cloud,
                                             const ImportanceField& field, Scalar sigma,
                                             int batch_size, ProposalPhase phase, Rng& rng);

/// rho = logistic(I) * 1/(1 + lambda_v c(v')), with c read from the grid
/// before the insertion. On accept the splat is appended to the cloud and the
/// grid count at v' is incremented, so later candidates see this birth.
bool accept_candidate(ProposalCandidate& candidate, GaussianCloud& cloud, VoxelGrid& grid,
                      Scalar lambda_v, Rng& rng);

struct RelocationMove {
    int dead_index = -1;
    int target_index = -1;
};

struct RelocationReport {
    std::vector<RelocationMove> moves;
    bool no_alive_warning = false;
    int count() const { return static_cast<int>(moves.size()); }
};

/// Copies an opacity-sampled healthy splat onto every splat with activated
/// opacity <= tau. When m dead splats land on one target, the target and the
/// receivers all take activated opacity 1 - (1 - alpha)^{1/(m+1)}, which
/// preserves the stack's composited alpha; scales are shared unchanged.
/// Splat count never changes.
RelocationReport relocate(GaussianCloud& cloud, Scalar tau, Rng& rng);

enum class OpacityTermMode { deficit, coverage };

struct DensifyParams {
    Scalar sigma_coarse = 0.1;
    Scalar sigma_fine = 0.02;
    int batch_coarse = 0;
    int batch_fine = 0;
    Scalar voxel_size = 0.02;
    Scalar lambda_v = 0.5;
    ImportanceWeights weights;
    Scalar relocate_tau = 0.005;
    bool relocation_enabled = true;
    OpacityTermMode opacity_mode = OpacityTermMode::deficit;
    bool keep_s_map = false;   // retain the field for debug dumps
    bool verify_grid = false;  // recount voxels after the step and compare
};

struct DensifyReport {
    int t = 0;
    int k_t = 0;
    int births_coarse = 0;
    int births_fine = 0;
    Scalar accept_rate_coarse = 0.0;
    Scalar accept_rate_fine = 0.0;
    int relocations = 0;
    std::size_t total_splats = 0;
    Scalar rho_min = 1.0;                 // over all candidates of the step
    Scalar rho_max = 0.0;
    std::vector<RelocationMove> moves;    // for optimizer-state bookkeeping
    PixelMap s_map;                       // only when keep_s_map
};

/// One densification step: camera subset -> aggregate error maps ->
/// relocation -> importance field -> voxel counts -> coarse then fine
/// propose/accept with sequential grid updates.
DensifyReport densification_step(GaussianCloud& cloud, const std::vector<Camera>& cameras,
                                 const std::vector<const ImageBuffer*>& targets,
                                 CameraSchedule& schedule, const DensifyParams& params,
                                 int t, Rng& rng, const RenderSettings& settings = {});

/// Multi-view error signals over a view subset, shared by the densification
/// step and the surrogate-correlation probe.
struct ErrorMaps {
    PixelMap opacity_accum;  // mean accumulated alpha over the subset
    AggregateMaps agg;
};

ErrorMaps compute_error_maps(const GaussianCloud& cloud,
                             const std::vector<const Camera*>& cameras,
                             const std::vector<const ImageBuffer*>& targets,
                             const RenderSettings& settings = {});

/// Robust-normalizes the three cues, fuses them logistically and projects the
/// field onto the splats through the reference camera.
ImportanceField importance_from_maps(const GaussianCloud& cloud, const ErrorMaps& maps,
                                     const Camera& reference, const DensifyParams& params);

}  // namespace mhgs
