#include "mhgs/camera.hpp"

namespace mhgs {

void validate_camera(const Camera& camera) {
    if (!(camera.fx > 0.0) || !(camera.fy > 0.0))
        throw contract_error("camera: focal lengths must be positive");
    if (!(camera.near_plane > 0.0) || !(camera.near_plane < camera.far_plane))
        throw contract_error("camera: require 0 < near < far");
    if (camera.width < 8 || camera.height < 8)
        throw contract_error("camera: resolution must be at least 8x8");
    if (!camera.rotation.allFinite() || !camera.translation.allFinite())
        throw contract_error("camera: non-finite extrinsics");
}

Camera look_at_camera(const Vec3& eye, const Vec3& target, Scalar fx, Scalar fy,
                      int width, int height, Scalar near_plane, Scalar far_plane) {
    Vec3 forward = (target - eye).normalized();
    Vec3 up_hint = Vec3::UnitY();
    if (std::abs(forward.dot(up_hint)) > 0.999) up_hint = Vec3::UnitX();
    const Vec3 right = forward.cross(up_hint).normalized();
    const Vec3 down = forward.cross(right).normalized();

    Camera cam;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width * 0.5;
    cam.cy = height * 0.5;
    cam.width = width;
    cam.height = height;
    cam.near_plane = near_plane;
    cam.far_plane = far_plane;
    validate_camera(cam);
    return cam;
}

}  // namespace mhgs
