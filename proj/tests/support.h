// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/blend.h>
#include <sgrt/rng.h>
#include <sgrt/scene.h>

#include <cmath>
#include <vector>

namespace sgrt::test {

// Running mean and variance.
struct Stats {
    double mean = 0, m2 = 0;
    std::size_t n = 0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / double(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
    double stderr_of_mean() const { return std::sqrt(variance() / double(n)); }
};

// |mean - expected| <= k SE, with a tiny absolute slack for zero-variance cases.
inline bool within_se(const Stats &s, double expected, double k = 4.0) {
    return std::abs(s.mean - expected) <= k * s.stderr_of_mean() + 1e-12;
}

class Random {
  public:
    explicit Random(std::uint64_t seed) : rng_(RngKey{seed, 0, 0, Phase::Test}) {}
    double uniform(double lo = 0, double hi = 1) { return lo + (hi - lo) * rng_.uniform(); }
    int integer(int lo, int hi) { return lo + int(rng_.uniform() * (hi - lo + 1)); }
    double normal() {
        const double u1 = 1 - rng_.uniform(), u2 = rng_.uniform();
        return std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2);
    }
    Vec3 vec3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
    Vec3 unit() { return normalize(Vec3{normal(), normal(), normal()}); }
    Quat rotation() { return normalize(Quat{normal(), normal(), normal(), normal()}); }

  private:
    RngStream rng_;
};

inline Gaussian random_gaussian(Random &r, const Vec3 &mean, double density) {
    Gaussian g;
    g.mean = mean;
    g.rotation = r.rotation();
    g.log_scales = {std::log(r.uniform(0.05, 0.3)), std::log(r.uniform(0.05, 0.3)),
                    std::log(r.uniform(0.05, 0.3))};
    g.density_logit = logit(density);
    g.appearance = Emissive{r.vec3(0, 1)};
    return g;
}

// Gaussians centered on the +z axis at random distinct depths, so the axis
// ray through the origin sees each at its mean with opacity = density.
inline Scene axis_scene(Random &r, int n, double alpha_lo = kAlphaMin, double alpha_hi = kAlphaMax) {
    Scene s;
    s.background = r.vec3(0, 1);
    for (int i = 0; i < n; ++i) {
        const double depth = 1.0 + 0.5 * i + r.uniform(0, 0.25);
        s.gaussians.push_back(random_gaussian(r, {0, 0, depth}, r.uniform(alpha_lo, alpha_hi)));
    }
    return s;
}

inline Ray axis_ray() {
    Ray ray;
    ray.dir = {0, 0, 1};
    return ray;
}

inline Hit make_hit(std::uint32_t id, double alpha, double depth) {
    Hit h;
    h.id = id;
    h.alpha = alpha;
    h.depth = depth;
    return h;
}

}  // namespace sgrt::test
