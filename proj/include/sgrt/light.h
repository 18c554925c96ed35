// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/math.h>

#include <string>
#include <variant>
#include <vector>

namespace sgrt {

// Radiant intensity with inverse-square falloff.
struct PointLight {
    Vec3 position;
    Vec3 intensity{1, 1, 1};
    bool operator==(const PointLight &) const = default;
};

// `dir` points from the scene toward the light.
struct DirectionalLight {
    Vec3 dir{0, 1, 0};
    Vec3 irradiance{1, 1, 1};
    bool operator==(const DirectionalLight &) const = default;
};

// Equirectangular radiance map with +y as the pole. Row 0 is the +y pole,
// column 0 is azimuth 0 measured from +x toward +z.
struct EnvmapLight {
    int width = 1, height = 1;
    std::vector<Vec3> radiance{Vec3{}};
    // File the map was loaded from; empty for inline maps.
    std::string source;

    bool operator==(const EnvmapLight &) const = default;
};

using Light = std::variant<PointLight, DirectionalLight, EnvmapLight>;

void validate(const Light &light);

// Bilinear lookup with azimuthal wrap and polar clamp.
Vec3 lookup(const EnvmapLight &env, const Vec3 &dir);

}  // namespace sgrt
