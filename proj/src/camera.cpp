// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/camera.h>
#include <sgrt/error.h>

namespace sgrt {

RigidTransform look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up) {
    const Vec3 forward = normalize(target - eye);
    Vec3 right = cross(forward, up);
    if (length(right) < 1e-12) right = cross(forward, Vec3{1, 0, 0});
    right = normalize(right);
    // y points down in camera space.
    const Vec3 down = cross(forward, right);
    return {Mat3::from_columns(right, down, forward), eye};
}

int width(const Camera &cam) {
    return std::visit([](const auto &c) { return c.width; }, cam);
}

int height(const Camera &cam) {
    return std::visit([](const auto &c) { return c.height; }, cam);
}

const RigidTransform &pose(const Camera &cam) {
    return std::visit([](const auto &c) -> const RigidTransform & { return c.pose; }, cam);
}

void validate(const Camera &cam) {
    if (width(cam) <= 0 || height(cam) <= 0) fail("camera dimensions must be positive");
    const RigidTransform &p = pose(cam);
    const Mat3 rrt = p.rotation * transpose(p.rotation);
    if (max_abs(rrt - Mat3::identity()) > 1e-6 || determinant(p.rotation) < 0)
        fail("camera pose rotation is not orthonormal");
    if (!is_finite(p.translation)) fail("camera pose translation is not finite");
    if (const auto *pin = std::get_if<PinholeCamera>(&cam)) {
        if (!(pin->fov_y > 0 && pin->fov_y < kPi)) fail("pinhole fov must lie in (0, pi)");
    } else {
        const auto &fish = std::get<FisheyeCamera>(cam);
        if (!(fish.fov > 0 && fish.fov <= kPi)) fail("fisheye fov must lie in (0, pi]");
    }
}

namespace {

Ray world_ray(const RigidTransform &pose, const Vec3 &dir_cam) {
    Ray r;
    r.origin = pose.translation;
    r.dir = normalize(pose.apply_dir(normalize(dir_cam)));
    return r;
}

Ray pinhole_ray(const PinholeCamera &cam, double px, double py) {
    const double tan_half = std::tan(cam.fov_y / 2);
    const double aspect = double(cam.width) / cam.height;
    const double sx = (2 * px / cam.width - 1) * tan_half * aspect;
    const double sy = (2 * py / cam.height - 1) * tan_half;
    return world_ray(cam.pose, {sx, sy, 1});
}

Ray fisheye_ray(const FisheyeCamera &cam, double px, double py) {
    const double radius = 0.5 * std::min(cam.width, cam.height);
    const double dx = px - 0.5 * cam.width;
    const double dy = py - 0.5 * cam.height;
    const double r_norm = std::sqrt(dx * dx + dy * dy) / radius;
    if (r_norm > 1.0) {
        Ray r = world_ray(cam.pose, {0, 0, 1});
        r.valid = false;
        return r;
    }
    const double theta = r_norm * cam.fov / 2;
    const double phi = std::atan2(dy, dx);
    const double st = std::sin(theta);
    return world_ray(cam.pose, {st * std::cos(phi), st * std::sin(phi), std::cos(theta)});
}

}  // namespace

Ray generate_ray(const Camera &cam, int i, int j, double u, double v) {
    if (i < 0 || j < 0 || i >= width(cam) || j >= height(cam))
        fail("pixel ({}, {}) outside {}x{} image", i, j, width(cam), height(cam));
    const double px = i + u, py = j + v;
    if (const auto *pin = std::get_if<PinholeCamera>(&cam)) return pinhole_ray(*pin, px, py);
    return fisheye_ray(std::get<FisheyeCamera>(cam), px, py);
}

}  // namespace sgrt
