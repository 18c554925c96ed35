// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/gaussian.h>
#include <sgrt/math.h>

#include <variant>

namespace sgrt {

// Camera-to-world rigid transform. Camera space is x right, y down, z forward.
struct RigidTransform {
    Mat3 rotation = Mat3::identity();
    Vec3 translation;

    Vec3 apply_dir(const Vec3 &d) const { return rotation * d; }
    bool operator==(const RigidTransform &) const = default;
};

// Pose placed at `eye` looking at `target`; `up` fixes the roll.
RigidTransform look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up = {0, 1, 0});

struct PinholeCamera {
    RigidTransform pose;
    double fov_y = kPi / 3;
    int width = 1, height = 1;
    bool operator==(const PinholeCamera &) const = default;
};

// Equidistant fisheye: theta = r_norm * fov / 2, where r_norm is the distance
// from the image center in units of min(width, height) / 2.
struct FisheyeCamera {
    RigidTransform pose;
    double fov = kPi;
    int width = 1, height = 1;
    bool operator==(const FisheyeCamera &) const = default;
};

using Camera = std::variant<PinholeCamera, FisheyeCamera>;

int width(const Camera &cam);
int height(const Camera &cam);
const RigidTransform &pose(const Camera &cam);

// Throws on non-positive dimensions, a non-rotation pose, or an invalid fov.
void validate(const Camera &cam);

// Ray through pixel (i, j) at sub-pixel offset (u, v) in [0,1)^2. Fisheye
// samples outside the image circle come back with valid == false.
Ray generate_ray(const Camera &cam, int i, int j, double u = 0.5, double v = 0.5);

}  // namespace sgrt
