// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/camera.h>
#include <sgrt/image.h>
#include <sgrt/relight.h>
#include <sgrt/scene.h>

#include <cstdint>

namespace sgrt {

enum class RenderMode { Sorted, Stochastic };

struct RenderOptions {
    RenderMode mode = RenderMode::Sorted;
    int samples = 30;  // forward samples per pixel in stochastic mode
    std::uint64_t seed = 0;
    int threads = 1;
    ShadeOptions shade;
};

inline std::uint64_t pixel_id(const Camera &cam, int i, int j) {
    return std::uint64_t(j) * std::uint64_t(width(cam)) + std::uint64_t(i);
}

// Colors of `hits` for the sorted path; reflective Gaussians are shaded with
// one stream per hit keyed by (seed, pixel, gaussian id).
std::vector<Vec3> hit_colors(const TracedScene &scene, const Ray &ray, std::span<const Hit> hits,
                             std::uint64_t seed, std::uint64_t pixel, const ShadeOptions &shade);

Vec3 render_pixel(const TracedScene &scene, const Ray &ray, const RenderOptions &opts,
                  std::uint64_t pixel);

// Pixel centers only; results do not depend on opts.threads.
Image render(const TracedScene &scene, const Camera &cam, const RenderOptions &opts);

}  // namespace sgrt
