// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/optimize.h>
#include <sgrt/scene.h>

#include <cstdint>

namespace sgrt {

// Small synthetic scenes. All of them are pure functions of the seed.

// `count` emissive Gaussians clustered around the origin, black background,
// plus `views` pinhole cameras on a ring looking at the origin.
Scene toy_emissive_scene(std::uint64_t seed, int count = 8, int views = 8, int resolution = 64);

// A row of Gaussians along the camera axis with a near-opaque occluder in
// front; used by the variance benchmark.
Scene occluder_scene(std::uint64_t seed);

// `count` Lambertian Gaussians lit by three point lights.
Scene toy_relight_scene(std::uint64_t seed, int count = 8, int views = 8, int resolution = 32);

// Light position held out of relighting training.
PointLight held_out_light();

// Cameras on a ring of radius `distance` around the origin, alternating
// above and below the equator.
std::vector<Camera> ring_cameras(int views, int resolution, double distance = 4.0, double fov_y = 0.8);

// Initial guess for reconstruction: means jittered from `reference`, and
// appearance, scales, rotations and densities drawn at random.
Scene random_init(const Scene &reference, std::uint64_t seed, double jitter = 0.1);

// Targets rendered from `scene` with its cameras. Sorted mode blends
// exactly; stochastic mode averages `samples` picks per pixel.
Dataset render_dataset(const Scene &scene, bool stochastic, int samples, std::uint64_t seed, int threads = 1);

// Every camera rendered once per light, with only that light on.
Dataset render_dataset_per_light(const Scene &scene, int samples, std::uint64_t seed, int threads = 1);

}  // namespace sgrt
