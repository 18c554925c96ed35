// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/blend.h>
#include <sgrt/light.h>
#include <sgrt/rng.h>
#include <sgrt/scene.h>

#include <array>

namespace sgrt {

// Cosine-weighted BRDF value f_r(w_in, w_out), per channel.
Vec3 reflectance(const Reflective &r, const Vec3 &w_in, const Vec3 &w_out);

struct ShadeOptions {
    int env_samples = 16;
    // Use the exact product transmittance instead of the binary estimate.
    // Only meant for noise-free reference renders.
    bool exact_transmittance = false;
};

// Shaded color together with the per-channel terms it is linear in:
// color = albedo * irradiance, and d color_c / d normal = albedo_c * normal_terms[c].
struct ShadeResult {
    Vec3 color;
    Vec3 irradiance;
    std::array<Vec3, 3> normal_terms{};
};

// Direct lighting of Gaussian `id` at x seen from w_out. Point and
// directional lights are summed; the environment is integrated with uniform
// sphere directions. Shadow transmittance excludes the Gaussian itself.
ShadeResult shade_detailed(const TracedScene &scene, std::uint32_t id, const Vec3 &x,
                           const Vec3 &w_out, RngStream &rng, const ShadeOptions &opts = {});

inline Vec3 shade(const TracedScene &scene, std::uint32_t id, const Vec3 &x, const Vec3 &w_out,
                  RngStream &rng, const ShadeOptions &opts = {}) {
    return shade_detailed(scene, id, x, w_out, rng, opts).color;
}

struct ShadeGradient {
    Vec3 d_albedo;
    Vec3 d_normal;
};

// Partials of the shade estimate at its sampled transmittances, contracted
// with the upstream dL/dc. Transmittance itself is not differentiated.
ShadeGradient shade_gradient(const Reflective &r, const ShadeResult &s, const Vec3 &upstream);
ShadeGradient shade_gradient(const TracedScene &scene, std::uint32_t id, const Vec3 &x,
                             const Vec3 &w_out, RngStream &rng, const Vec3 &upstream,
                             const ShadeOptions &opts = {});

// Color of Gaussian `id` picked at `depth` along a camera ray: the stored
// emission, or the shaded reflection at the maximum-response point.
Vec3 gaussian_color(const TracedScene &scene, std::uint32_t id, const Ray &ray, double depth,
                    RngStream &rng, const ShadeOptions &opts = {});

bool has_reflective(const Scene &scene);

}  // namespace sgrt
