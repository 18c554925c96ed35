// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/blend.h>
#include <sgrt/error.h>
#include <sgrt/parallel.h>
#include <sgrt/render.h>

namespace sgrt {

std::vector<Vec3> hit_colors(const TracedScene &scene, const Ray &ray, std::span<const Hit> hits,
                             std::uint64_t seed, std::uint64_t pixel, const ShadeOptions &shade) {
    std::vector<Vec3> colors;
    colors.reserve(hits.size());
    for (const Hit &h : hits) {
        RngStream rng(RngKey{seed, pixel, h.id, Phase::Shade});
        colors.push_back(gaussian_color(scene, h.id, ray, h.depth, rng, shade));
    }
    return colors;
}

Vec3 render_pixel(const TracedScene &scene, const Ray &ray, const RenderOptions &opts,
                  std::uint64_t pixel) {
    if (!ray.valid) return scene.background();
    if (opts.mode == RenderMode::Sorted) {
        const std::vector<Hit> hits = collect_hits(scene, ray);
        const std::vector<Vec3> colors = hit_colors(scene, ray, hits, opts.seed, pixel, opts.shade);
        return sorted_blend_aligned(hits, colors, scene.background()).color;
    }
    if (opts.samples < 1) fail("stochastic rendering needs at least one sample per pixel");
    const RngKey key{opts.seed, pixel, 0, Phase::Forward};
    return stochastic_color(scene, ray, opts.samples, key, [&](const Pick &p, int m) {
        RngStream rng(RngKey{opts.seed, pixel, std::uint64_t(m), Phase::Shade});
        return gaussian_color(scene, p.id, ray, p.depth, rng, opts.shade);
    });
}

Image render(const TracedScene &scene, const Camera &cam, const RenderOptions &opts) {
    validate(cam);
    Image img(width(cam), height(cam));
    parallel_for(std::size_t(img.height), opts.threads, [&](std::size_t row) {
        const int j = static_cast<int>(row);
        for (int i = 0; i < img.width; ++i)
            img.set(i, j, render_pixel(scene, generate_ray(cam, i, j), opts, pixel_id(cam, i, j)));
    });
    return img;
}

}  // namespace sgrt
