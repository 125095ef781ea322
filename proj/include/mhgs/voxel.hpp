#pragma once

#include "mhgs/splat.hpp"

#include <cstdint>
#include <unordered_map>

namespace mhgs {

struct VoxelKey {
    std::int64_t x = 0, y = 0, z = 0;
    bool operator==(const VoxelKey&) const = default;
    bool operator<(const VoxelKey& o) const {
        if (x != o.x) return x < o.x;
        if (y != o.y) return y < o.y;
        return z < o.z;
    }
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (std::int64_t v : {k.x, k.y, k.z}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 0x100000001b3ull;
        }
        return static_cast<std::size_t>(h);
    }
};

/// Component-wise floor(position / voxel_size); cells are half-open.
VoxelKey voxel_index(const Vec3& position, Scalar voxel_size);

/// Sparse occupancy counter over splat centers.
struct VoxelGrid {
    Scalar voxel_size = 0.0;
    std::unordered_map<VoxelKey, std::int64_t, VoxelKeyHash> counts;
    std::int64_t total = 0;

    std::int64_t count_at(const VoxelKey& key) const {
        const auto it = counts.find(key);
        return it == counts.end() ? 0 : it->second;
    }

    void increment(const VoxelKey& key) {
        ++counts[key];
        ++total;
    }
};

VoxelGrid voxel_counts(const GaussianCloud& cloud, Scalar voxel_size);

}  // namespace mhgs
