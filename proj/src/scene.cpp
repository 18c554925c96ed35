// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>
#include <sgrt/scene.h>

namespace sgrt {

void validate(const Scene &scene) {
    if (!is_finite(scene.background)) fail("scene background is not finite");
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        try {
            validate(scene.gaussians[i]);
        } catch (const Error &e) {
            fail("gaussians[{}]: {}", i, e.what());
        }
    }
    for (std::size_t i = 0; i < scene.lights.size(); ++i) {
        try {
            validate(scene.lights[i]);
        } catch (const Error &e) {
            fail("lights[{}]: {}", i, e.what());
        }
    }
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
        try {
            validate(scene.cameras[i]);
        } catch (const Error &e) {
            fail("cameras[{}]: {}", i, e.what());
        }
    }
}

TracedScene::TracedScene(Scene scene) : scene_(std::move(scene)) {
    kernels_.reserve(scene_.gaussians.size());
    for (const Gaussian &g : scene_.gaussians) kernels_.push_back(make_kernel(g));
    bvh_ = Bvh::build(scene_.gaussians);
}

std::vector<Hit> collect_hits(const TracedScene &scene, const Ray &ray, std::uint32_t skip) {
    std::vector<Hit> hits;
    for_each_hit(scene, ray, [&](const Hit &h) { hits.push_back(h); }, skip);
    return hits;
}

}  // namespace sgrt
