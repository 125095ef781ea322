#pragma once

#include "mhgs/camera.hpp"
#include "mhgs/image.hpp"
#include "mhgs/render.hpp"
#include "mhgs/splat.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace mhgs {

enum class SceneLayout { uniform, clustered, shell };
enum class ColorScheme { position, random, palette };

/// Procedural ground-truth scene parameters. Everything is derived
/// deterministically from the seed.
struct SceneSpec {
    int n_gaussians = 2000;
    Scalar extent = 1.0;  // bounding-cube half-width
    SceneLayout layout = SceneLayout::clustered;
    ColorScheme color_scheme = ColorScheme::position;
    Scalar opacity_min = 0.4;
    Scalar opacity_max = 0.9;
    std::uint64_t seed = 0;
};

/// Positions follow the layout, scales track local nearest-neighbor spacing,
/// opacities fill the configured range.
GaussianCloud generate_scene(const SceneSpec& spec);

/// Cameras on a sphere segment around look_at, evenly spaced in azimuth, with
/// elevations spread linearly across [elev_lo_deg, elev_hi_deg].
std::vector<Camera> camera_rig(int n_cameras, Scalar radius, const Vec3& look_at,
                               Scalar elev_lo_deg, Scalar elev_hi_deg, int width = 64,
                               int height = 64, Scalar fov_deg = 50.0);

struct Dataset {
    std::vector<Camera> cameras;
    std::vector<ImageBuffer> images;  // one target per camera
    std::vector<int> train_indices;
    std::vector<int> test_indices;
    std::optional<GaussianCloud> ground_truth;
    Scalar extent = 1.0;

    std::size_t view_count() const { return cameras.size(); }
};

/// Renders the rig against the cloud (the same forward renderer training
/// uses), assigning every k-th camera to the test split.
Dataset bake_dataset(const GaussianCloud& cloud, const std::vector<Camera>& rig,
                     int test_every = 8, const RenderSettings& settings = {});

/// Directory layout: cameras.txt (documented plain text), view_###.ppm per
/// camera, ground_truth.ply when known.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Seeded random initialization for training: positions uniform in the
/// extent cube, mid-gray colors, uniform opacity.
GaussianCloud random_init_cloud(int n, Scalar extent, Scalar init_opacity, Scalar init_scale,
                                std::uint64_t seed);

}  // namespace mhgs
