// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/rng.h>
#include <sgrt/scene.h>

#include <span>
#include <vector>

namespace sgrt {

// Shadow rays start and stop this far from their endpoints.
inline constexpr double kShadowEpsilon = 1e-4;

struct BlendResult {
    Vec3 color;
    double transmittance = 1;  // product of (1 - alpha) over all hits
};

// Indices of `hits` ordered front to back; equal depths fall back to id order.
std::vector<std::size_t> depth_order(std::span<const Hit> hits);

// Exact front-to-back alpha blending of unsorted hits plus T * background.
// `colors` is indexed by Gaussian id.
BlendResult sorted_blend(std::span<const Hit> hits, std::span<const Vec3> colors,
                         const Vec3 &background);
// As above with colors[i] belonging to hits[i].
BlendResult sorted_blend_aligned(std::span<const Hit> hits, std::span<const Vec3> colors,
                                 const Vec3 &background);

// Running selection of the stochastic front-most pick.
struct Pick {
    std::uint32_t id = kNoGaussian;
    double depth = kInfinity;
    double alpha = 1;

    bool none() const { return id == kNoGaussian; }
    bool operator==(const Pick &) const = default;
};

// One visit of the selection loop: a hit replaces the current pick when it is
// behind `min_depth`, survives the coin flip and is closer than the pick.
// `xi` must be drawn for every visited hit so streams stay aligned.
inline void update_pick(Pick &pick, const Hit &hit, double xi, double min_depth) {
    if (hit.depth > min_depth && xi < hit.alpha && hit.depth < pick.depth)
        pick = {hit.id, hit.depth, hit.alpha};
}

// Draws I with mass alpha_I * prod_{j in front, behind min_depth}(1 - alpha_j),
// or none with the remaining mass. Only hits strictly behind min_depth compete.
Pick pick_front(std::span<const Hit> hits, RngStream &rng, double min_depth = -kInfinity);
Pick pick_front(const TracedScene &scene, const Ray &ray, RngStream &rng, double min_depth = -kInfinity,
                std::uint32_t skip = kNoGaussian);

// Independent picks sharing one traversal; picks[m] uses rngs[m] and min_depths[m].
void pick_front_multi(const TracedScene &scene, const Ray &ray, std::span<RngStream> rngs,
                      std::span<const double> min_depths, std::span<Pick> picks);

// Color of a stored-emission Gaussian; throws for reflective appearance.
Vec3 emissive_color(const Gaussian &g);
std::vector<Vec3> emissive_colors(const Scene &scene);

// Mean of M_f trials of the single-pick estimator. `color(pick, m)` evaluates
// the selected Gaussian for trial m and is only called for non-empty picks.
template <typename ColorFn>
Vec3 stochastic_color(const TracedScene &scene, const Ray &ray, int num_samples, const RngKey &key,
                      ColorFn &&color) {
    std::vector<RngStream> rngs(num_samples);
    for (int m = 0; m < num_samples; ++m) rngs[m] = RngStream(key.with_sample(m));
    std::vector<double> min_depths(num_samples, -kInfinity);
    std::vector<Pick> picks(num_samples);
    pick_front_multi(scene, ray, rngs, min_depths, picks);
    Vec3 total;
    for (int m = 0; m < num_samples; ++m)
        total += picks[m].none() ? scene.background() : color(picks[m], m);
    return total / num_samples;
}

Vec3 stochastic_color(const TracedScene &scene, const Ray &ray, int num_samples, const RngKey &key);

// Shadow ray from x toward a point light, trimmed by kShadowEpsilon at both ends.
// Returns a ray with valid == false when the light coincides with x.
Ray shadow_ray_to_point(const Vec3 &x, const Vec3 &light_position);
// Shadow ray from x toward an infinitely distant direction.
Ray shadow_ray_to_direction(const Vec3 &x, const Vec3 &dir);

// Binary transmittance: 1 iff the pick along the shadow ray comes back empty.
int transmittance_estimate(const TracedScene &scene, const Ray &shadow_ray, RngStream &rng,
                           std::uint32_t skip = kNoGaussian);
// prod (1 - alpha) over the shadow-ray hits.
double transmittance_exact(const TracedScene &scene, const Ray &shadow_ray,
                           std::uint32_t skip = kNoGaussian);

}  // namespace sgrt
