// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/blend.h>
#include <sgrt/error.h>

#include <algorithm>
#include <numeric>

namespace sgrt {

std::vector<std::size_t> depth_order(std::span<const Hit> hits) {
    std::vector<std::size_t> order(hits.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (hits[a].depth != hits[b].depth) return hits[a].depth < hits[b].depth;
        return hits[a].id < hits[b].id;
    });
    return order;
}

BlendResult sorted_blend_aligned(std::span<const Hit> hits, std::span<const Vec3> colors,
                                 const Vec3 &background) {
    if (colors.size() != hits.size()) fail("sorted_blend: {} colors for {} hits", colors.size(), hits.size());
    BlendResult r;
    for (std::size_t i : depth_order(hits)) {
        r.color += colors[i] * (hits[i].alpha * r.transmittance);
        r.transmittance *= 1 - hits[i].alpha;
    }
    r.color += background * r.transmittance;
    return r;
}

BlendResult sorted_blend(std::span<const Hit> hits, std::span<const Vec3> colors,
                         const Vec3 &background) {
    std::vector<Vec3> aligned;
    aligned.reserve(hits.size());
    for (const Hit &h : hits) {
        if (h.id >= colors.size()) fail("sorted_blend: no color for gaussian {}", h.id);
        aligned.push_back(colors[h.id]);
    }
    return sorted_blend_aligned(hits, aligned, background);
}

Pick pick_front(std::span<const Hit> hits, RngStream &rng, double min_depth) {
    Pick pick;
    for (const Hit &h : hits) update_pick(pick, h, rng.uniform(), min_depth);
    return pick;
}

Pick pick_front(const TracedScene &scene, const Ray &ray, RngStream &rng, double min_depth,
                std::uint32_t skip) {
    Pick pick;
    for_each_hit(
        scene, ray, [&](const Hit &h) { update_pick(pick, h, rng.uniform(), min_depth); }, skip);
    return pick;
}

void pick_front_multi(const TracedScene &scene, const Ray &ray, std::span<RngStream> rngs,
                      std::span<const double> min_depths, std::span<Pick> picks) {
    const std::size_t n = rngs.size();
    if (min_depths.size() != n || picks.size() != n) fail("pick_front_multi: mismatched spans");
    for (std::size_t m = 0; m < n; ++m) picks[m] = Pick{};
    for_each_hit(scene, ray, [&](const Hit &h) {
        for (std::size_t m = 0; m < n; ++m) update_pick(picks[m], h, rngs[m].uniform(), min_depths[m]);
    });
}

Vec3 emissive_color(const Gaussian &g) {
    const auto *e = std::get_if<Emissive>(&g.appearance);
    if (!e) fail("gaussian has reflective appearance; a shading context is required");
    return e->rgb;
}

std::vector<Vec3> emissive_colors(const Scene &scene) {
    std::vector<Vec3> colors;
    colors.reserve(scene.gaussians.size());
    for (const Gaussian &g : scene.gaussians) colors.push_back(emissive_color(g));
    return colors;
}

Vec3 stochastic_color(const TracedScene &scene, const Ray &ray, int num_samples, const RngKey &key) {
    if (num_samples < 1) fail("stochastic_color needs at least one sample");
    return stochastic_color(scene, ray, num_samples, key,
                            [&](const Pick &p, int) { return emissive_color(scene.gaussian(p.id)); });
}

Ray shadow_ray_to_point(const Vec3 &x, const Vec3 &light_position) {
    Ray r;
    r.origin = x;
    const Vec3 d = light_position - x;
    const double dist = length(d);
    if (!(dist > 2 * kShadowEpsilon)) {
        r.valid = false;
        return r;
    }
    r.dir = d / dist;
    r.t_min = kShadowEpsilon;
    r.t_max = dist - kShadowEpsilon;
    return r;
}

Ray shadow_ray_to_direction(const Vec3 &x, const Vec3 &dir) {
    Ray r;
    r.origin = x;
    r.dir = normalize(dir);
    r.t_min = kShadowEpsilon;
    r.t_max = kInfinity;
    return r;
}

int transmittance_estimate(const TracedScene &scene, const Ray &shadow_ray, RngStream &rng,
                           std::uint32_t skip) {
    return pick_front(scene, shadow_ray, rng, -kInfinity, skip).none() ? 1 : 0;
}

double transmittance_exact(const TracedScene &scene, const Ray &shadow_ray, std::uint32_t skip) {
    double t = 1;
    for_each_hit(scene, shadow_ray, [&](const Hit &h) { t *= 1 - h.alpha; }, skip);
    return t;
}

}  // namespace sgrt
