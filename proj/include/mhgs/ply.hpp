#pragma once

#include "mhgs/splat.hpp"

#include <filesystem>

namespace mhgs {

/// Binary little-endian PLY with one float32 vertex element per splat:
/// x y z scale_0..2 (log space) rot_0..3 (w,x,y,z) red green blue opacity (logit).
void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path);

GaussianCloud load_ply(const std::filesystem::path& path);

/// Exact byte size save_ply would produce; reported as model storage.
std::size_t ply_storage_bytes(const GaussianCloud& cloud);

}  // namespace mhgs
