// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/bvh.h>
#include <sgrt/error.h>

#include <algorithm>
#include <numeric>

namespace sgrt {

void Aabb::expand(const Aabb &b) {
    for (int a = 0; a < 3; ++a) {
        min[a] = std::min(min[a], b.min[a]);
        max[a] = std::max(max[a], b.max[a]);
    }
}

bool intersects(const Aabb &box, const Ray &ray) {
    if (box.empty()) return false;
    double t0 = ray.t_min, t1 = ray.t_max;
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.dir[a];
        if (d == 0) {
            if (o < box.min[a] || o > box.max[a]) return false;
            continue;
        }
        const double inv = 1.0 / d;
        double tn = (box.min[a] - o) * inv;
        double tf = (box.max[a] - o) * inv;
        if (tn > tf) std::swap(tn, tf);
        t0 = std::max(t0, tn);
        t1 = std::min(t1, tf);
        if (t0 > t1) return false;
    }
    return true;
}

Aabb gaussian_bounds(const Gaussian &g, double k_sigma) {
    const Mat3 cov = covariance(g);
    const Vec3 half{k_sigma * std::sqrt(cov(0, 0)), k_sigma * std::sqrt(cov(1, 1)),
                    k_sigma * std::sqrt(cov(2, 2))};
    return {g.mean - half, g.mean + half};
}

Bvh Bvh::build(std::span<const Gaussian> gaussians, double k_sigma) {
    std::vector<Aabb> bounds;
    bounds.reserve(gaussians.size());
    for (const Gaussian &g : gaussians) bounds.push_back(gaussian_bounds(g, k_sigma));
    return build_from_bounds(std::move(bounds));
}

Bvh Bvh::build_from_bounds(std::vector<Aabb> bounds) {
    Bvh bvh;
    if (bounds.empty()) return bvh;
    std::vector<Vec3> centroids;
    centroids.reserve(bounds.size());
    for (const Aabb &b : bounds) centroids.push_back(b.center());
    bvh.indices_.resize(bounds.size());
    std::iota(bvh.indices_.begin(), bvh.indices_.end(), 0u);
    bvh.nodes_.reserve(2 * bounds.size());
    bvh.build_recursive(bounds, centroids, 0, static_cast<std::uint32_t>(bounds.size()));
    return bvh;
}

std::uint32_t Bvh::build_recursive(std::vector<Aabb> &bounds, std::vector<Vec3> &centroids,
                                   std::uint32_t first, std::uint32_t count) {
    const auto node_index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box, centroid_box;
    for (std::uint32_t i = first; i < first + count; ++i) {
        box.expand(bounds[indices_[i]]);
        const Vec3 &c = centroids[indices_[i]];
        centroid_box.expand({c, c});
    }
    nodes_[node_index].bounds = box;
    if (count <= kMaxLeafSize) {
        nodes_[node_index].first = first;
        nodes_[node_index].count = count;
        return node_index;
    }

    const Vec3 extent = centroid_box.max - centroid_box.min;
    int axis = 0;
    if (extent.y > extent[axis]) axis = 1;
    if (extent.z > extent[axis]) axis = 2;

    // Ties are broken by index so the split does not depend on nth_element's internals.
    const std::uint32_t mid = first + count / 2;
    std::nth_element(indices_.begin() + first, indices_.begin() + mid, indices_.begin() + first + count,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = centroids[a][axis], cb = centroids[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });

    const std::uint32_t left = build_recursive(bounds, centroids, first, mid - first);
    const std::uint32_t right = build_recursive(bounds, centroids, mid, first + count - mid);
    nodes_[node_index].left = left;
    nodes_[node_index].right = right;
    return node_index;
}

}  // namespace sgrt
