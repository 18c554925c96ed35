// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/bvh.h>
#include <sgrt/camera.h>
#include <sgrt/gaussian.h>
#include <sgrt/light.h>

#include <cstdint>
#include <limits>
#include <vector>

namespace sgrt {

// Editable scene description; this is what scene files hold and what the
// optimizer updates.
struct Scene {
    Vec3 background;
    std::vector<Gaussian> gaussians;
    std::vector<Light> lights;
    std::vector<Camera> cameras;

    bool operator==(const Scene &) const = default;
};

void validate(const Scene &scene);

inline constexpr std::uint32_t kNoGaussian = std::numeric_limits<std::uint32_t>::max();

// One ray-Gaussian interaction at the maximum-response point.
struct Hit {
    std::uint32_t id = kNoGaussian;
    double alpha = 0;
    double depth = 0;
};

// Immutable snapshot with precomputed kernels and a BVH. Safe to share across
// threads.
class TracedScene {
  public:
    explicit TracedScene(Scene scene);

    const Scene &scene() const { return scene_; }
    const std::vector<Gaussian> &gaussians() const { return scene_.gaussians; }
    const Gaussian &gaussian(std::uint32_t id) const { return scene_.gaussians[id]; }
    const GaussianKernel &kernel(std::uint32_t id) const { return kernels_[id]; }
    const Bvh &bvh() const { return bvh_; }
    const Vec3 &background() const { return scene_.background; }
    std::size_t size() const { return kernels_.size(); }

  private:
    Scene scene_;
    std::vector<GaussianKernel> kernels_;
    Bvh bvh_;
};

// Evaluates one Gaussian against a ray. A hit requires the unclamped peak to
// lie inside [t_min, t_max] and the opacity there to reach kAlphaMin.
inline bool evaluate_hit(const GaussianKernel &k, const Ray &ray, Hit &hit) {
    const double t = peak_parameter(ray, k);
    if (!(t >= ray.t_min && t <= ray.t_max)) return false;
    const double alpha = opacity(k, ray.at(t));
    if (alpha < kAlphaMin) return false;
    hit.alpha = alpha;
    hit.depth = t;
    return true;
}

// Streams every hit along the ray in traversal order (unspecified). `skip`
// excludes one Gaussian, used by shadow rays leaving a shaded Gaussian.
template <typename Visitor>
void for_each_hit(const TracedScene &scene, const Ray &ray, Visitor &&visit,
                  std::uint32_t skip = kNoGaussian) {
    if (!ray.valid) return;
    scene.bvh().for_each_candidate(ray, [&](std::uint32_t id) {
        if (id == skip) return;
        Hit hit;
        hit.id = id;
        if (evaluate_hit(scene.kernel(id), ray, hit)) visit(hit);
    });
}

// Same hit set without the BVH; the reference for traversal tests.
template <typename Visitor>
void for_each_hit_brute_force(const TracedScene &scene, const Ray &ray, Visitor &&visit,
                              std::uint32_t skip = kNoGaussian) {
    if (!ray.valid) return;
    for (std::uint32_t id = 0; id < scene.size(); ++id) {
        if (id == skip) continue;
        Hit hit;
        hit.id = id;
        if (evaluate_hit(scene.kernel(id), ray, hit)) visit(hit);
    }
}

std::vector<Hit> collect_hits(const TracedScene &scene, const Ray &ray,
                              std::uint32_t skip = kNoGaussian);

}  // namespace sgrt
