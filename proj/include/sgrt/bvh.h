// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/gaussian.h>

#include <cstdint>
#include <span>
#include <vector>

namespace sgrt {

inline constexpr double kBoundsSigma = 3.0;

struct Aabb {
    Vec3 min{kInfinity, kInfinity, kInfinity};
    Vec3 max{-kInfinity, -kInfinity, -kInfinity};

    bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }
    bool contains(const Vec3 &p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
    void expand(const Aabb &b);
    Vec3 center() const { return (min + max) * 0.5; }

    bool operator==(const Aabb &) const = default;
};

// Slab test against [t_min, t_max]; returns false for an empty box.
bool intersects(const Aabb &box, const Ray &ray);

// Box of the k-sigma ellipsoid; half-extent along axis e is k * sqrt(e^T Sigma e).
Aabb gaussian_bounds(const Gaussian &g, double k_sigma = kBoundsSigma);

// Flat median-split hierarchy over Gaussian bounds. Leaves hold at most
// kMaxLeafSize entries of the permutation array.
class Bvh {
  public:
    static constexpr int kMaxLeafSize = 4;

    struct Node {
        Aabb bounds;
        // Internal: children are (left, right). Leaf: range [first, first + count).
        std::uint32_t left = 0, right = 0;
        std::uint32_t first = 0, count = 0;

        bool is_leaf() const { return count > 0; }
        bool operator==(const Node &) const = default;
    };

    Bvh() = default;
    static Bvh build(std::span<const Gaussian> gaussians, double k_sigma = kBoundsSigma);
    static Bvh build_from_bounds(std::vector<Aabb> bounds);

    const std::vector<Node> &nodes() const { return nodes_; }
    const std::vector<std::uint32_t> &indices() const { return indices_; }
    bool empty() const { return nodes_.empty(); }

    // Calls fn(index) for every primitive whose box the ray overlaps.
    template <typename Fn>
    void for_each_candidate(const Ray &ray, Fn &&fn) const;

  private:
    std::uint32_t build_recursive(std::vector<Aabb> &bounds, std::vector<Vec3> &centroids,
                                  std::uint32_t first, std::uint32_t count);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> indices_;
};

template <typename Fn>
void Bvh::for_each_candidate(const Ray &ray, Fn &&fn) const {
    if (nodes_.empty()) return;
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node &node = nodes_[stack[--top]];
        if (!intersects(node.bounds, ray)) continue;
        if (node.is_leaf()) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) fn(indices_[i]);
        } else {
            stack[top++] = node.right;
            stack[top++] = node.left;
        }
    }
}

}  // namespace sgrt
