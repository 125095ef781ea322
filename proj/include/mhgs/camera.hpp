#pragma once

#include "mhgs/core.hpp"

namespace mhgs {

/// Pinhole camera: world-to-camera rigid transform plus intrinsics.
/// Camera space looks down +z; a point is in front of the camera when its
/// camera-space z is positive. Pixel (ix, iy) covers [ix,ix+1)x[iy,iy+1),
/// so its center sits at (ix + 0.5, iy + 0.5).
struct Camera {
    Mat3 rotation = Mat3::Identity();  // world-to-camera
    Vec3 translation = Vec3::Zero();
    Scalar fx = 100.0, fy = 100.0;
    Scalar cx = 32.0, cy = 32.0;
    int width = 64, height = 64;
    Scalar near_plane = 0.1, far_plane = 100.0;

    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }

    /// Perspective projection of a camera-space point to pixel coordinates.
    Vec2 project_camera_point(const Vec3& cam) const {
        return Vec2(fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy);
    }

    Vec2 project(const Vec3& world) const { return project_camera_point(to_camera(world)); }

    Vec3 center() const { return -rotation.transpose() * translation; }

    bool operator==(const Camera& o) const {
        return rotation == o.rotation && translation == o.translation && fx == o.fx &&
               fy == o.fy && cx == o.cx && cy == o.cy && width == o.width &&
               height == o.height && near_plane == o.near_plane && far_plane == o.far_plane;
    }
};

/// Throws contract_error unless fx,fy > 0, 0 < near < far and resolution >= 8x8.
void validate_camera(const Camera& camera);

/// Camera at `eye` aimed at `target` (world +y used as the up hint).
Camera look_at_camera(const Vec3& eye, const Vec3& target, Scalar fx, Scalar fy,
                      int width, int height, Scalar near_plane, Scalar far_plane);

}  // namespace mhgs
