#include "mhgs/voxel.hpp"

#include <cmath>

namespace mhgs {

VoxelKey voxel_index(const Vec3& position, Scalar voxel_size) {
    if (!(voxel_size > 0.0)) throw contract_error("voxel_index: voxel_size must be positive");
    if (!position.allFinite()) throw contract_error("voxel_index: non-finite position");
    return {static_cast<std::int64_t>(std::floor(position.x() / voxel_size)),
            static_cast<std::int64_t>(std::floor(position.y() / voxel_size)),
            static_cast<std::int64_t>(std::floor(position.z() / voxel_size))};
}

VoxelGrid voxel_counts(const GaussianCloud& cloud, Scalar voxel_size) {
    VoxelGrid grid;
    grid.voxel_size = voxel_size;
    for (const auto& s : cloud.splats) grid.increment(voxel_index(s.position, voxel_size));
    return grid;
}

}  // namespace mhgs
