#pragma once

#include "mhgs/camera.hpp"
#include "mhgs/image.hpp"
#include "mhgs/splat.hpp"

#include <optional>
#include <vector>

namespace mhgs {

/// A splat after perspective projection into one camera.
struct ProjectedSplat {
    Vec2 mean2d = Vec2::Zero();       // pixel coordinates of the projected center
    Mat2 cov2d = Mat2::Zero();        // JWSigmaW^TJ^T, upper-left 2x2, before dilation
    Scalar view_depth = 0.0;          // camera-space z
    int splat_index = -1;
};

struct RenderSettings {
    Vec3 background = Vec3::Zero();
    int threads = 1;
};

struct RenderOutput {
    ImageBuffer image;
    PixelMap accumulated_alpha;            // 1 - final transmittance per pixel
    std::vector<ProjectedSplat> sorted;    // retained splats, front-to-back
    int skipped_degenerate = 0;

    // cache identity for the matching backward pass
    Camera camera;
    std::size_t splat_count = 0;
};

/// Gradients of a scalar loss with respect to one splat's raw parameters.
struct SplatGrads {
    Vec3 position = Vec3::Zero();
    Vec3 raw_scale = Vec3::Zero();
    Vec4 rotation = Vec4::Zero();   // (w, x, y, z), tangent to the unit sphere
    Vec3 color = Vec3::Zero();
    Scalar raw_opacity = 0.0;
    Vec2 mean2d = Vec2::Zero();     // view-space positional gradient (pixel units)
};

/// Projects a single splat; nullopt when the center is behind the near plane.
std::optional<ProjectedSplat> project_gaussian(const GaussianSplat& splat,
                                               const Camera& camera, int splat_index = 0);

/// Forward rasterization: depth-sorted front-to-back alpha compositing of the
/// 3-sigma footprints, early-terminated per pixel at transmittance < 1e-4.
RenderOutput render(const GaussianCloud& cloud, const Camera& camera,
                    const RenderSettings& settings = {});

/// Analytic gradients of sum(dL_dimage . image) with respect to every raw
/// splat parameter. Traverses pixels exactly as the forward pass did; the
/// per-splat reduction is fixed-order (per-row partials merged in row order)
/// so results are identical at any thread count.
std::vector<SplatGrads> render_backward(const GaussianCloud& cloud, const Camera& camera,
                                        const ImageBuffer& dL_dimage,
                                        const RenderOutput& cache,
                                        const RenderSettings& settings = {});

}  // namespace mhgs
