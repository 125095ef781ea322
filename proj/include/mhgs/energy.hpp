#pragma once

#include "mhgs/splat.hpp"
#include "mhgs/voxel.hpp"

namespace mhgs {

/// Negative log-posterior split into its photometric and occupancy parts.
struct EnergyValue {
    Scalar loss_part = 0.0;
    Scalar prior_part = 0.0;  // lambda_v * sum_v ln(1 + count(v))
    Scalar total = 0.0;       // loss_part + prior_part, exactly
};

/// The occupancy prior sums over occupied voxels only (empty cells add ln 1).
/// Voxels are visited in sorted key order so the sum is reproducible.
EnergyValue energy(const GaussianCloud& cloud, Scalar loss_value, const VoxelGrid& grid,
                   Scalar lambda_v);

/// Energy change of inserting one splat into a voxel with `count_before`
/// occupants, plus the practical crowding factor used by the acceptance rule.
struct InsertionDelta {
    Scalar exact = 0.0;        // delta_loss + lambda_v ln((2+c)/(1+c))
    Scalar exact_prior = 0.0;  // lambda_v ln((2+c)/(1+c))
    Scalar approx_D = 0.0;     // 1 / (1 + lambda_v c)
};

InsertionDelta delta_energy_insert(Scalar delta_loss, std::int64_t count_before,
                                   Scalar lambda_v);

}  // namespace mhgs
