// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/math.h>

#include <algorithm>
#include <cstdint>
#include <variant>

namespace sgrt {

// Opacity is clamped to [0, kAlphaMax]; hits below kAlphaMin are ignored everywhere.
inline constexpr double kAlphaMax = 1.0 - 1e-4;
inline constexpr double kAlphaMin = 1.0 / 255.0;

struct Ray {
    Vec3 origin;
    Vec3 dir{0, 0, 1};
    double t_min = 0;
    double t_max = kInfinity;
    // False for camera samples that map outside the image (fisheye corners).
    bool valid = true;

    Vec3 at(double t) const { return origin + dir * t; }
};

// Throws if the direction is not unit length or the interval is empty.
void validate(const Ray &ray);

struct Emissive {
    Vec3 rgb;
    bool operator==(const Emissive &) const = default;
};

enum class ReflectanceModel : std::uint8_t {
    Isotropic,  // albedo / 4pi
    Lambert,    // albedo * max(0, n.w_in) / pi
};

struct Reflective {
    Vec3 albedo{0.5, 0.5, 0.5};
    Vec3 normal{0, 0, 1};
    ReflectanceModel model = ReflectanceModel::Lambert;
    bool operator==(const Reflective &) const = default;
};

using Appearance = std::variant<Emissive, Reflective>;

struct Gaussian {
    Vec3 mean;
    Quat rotation;
    Vec3 log_scales;  // log of per-axis standard deviations
    double density_logit = 0;
    Appearance appearance = Emissive{};

    bool operator==(const Gaussian &) const = default;
};

inline double density(const Gaussian &g) { return logistic(g.density_logit); }

// Throws sgrt::Error describing the first violated invariant.
void validate(const Gaussian &g);

// Sigma = R diag(exp(2 s)) R^T, with R from the normalized rotation.
Mat3 covariance(const Gaussian &g);
// Inverse covariance, computed directly as R diag(exp(-2 s)) R^T.
Mat3 precision(const Gaussian &g);

// Per-Gaussian quantities needed on the hot path.
struct GaussianKernel {
    Vec3 mean;
    Mat3 precision;
    double density = 0;
};

GaussianKernel make_kernel(const Gaussian &g);

struct MaxResponse {
    double t = 0;
    Vec3 x;
};

// Closed-form maximizer of the Gaussian density along the ray, clamped to
// [t_min, t_max].
MaxResponse max_response(const Ray &ray, const GaussianKernel &k);
MaxResponse max_response(const Ray &ray, const Gaussian &g);

// Unclamped maximizer parameter; may lie outside the ray interval.
inline double peak_parameter(const Ray &ray, const GaussianKernel &k) {
    const Vec3 pd = k.precision * ray.dir;
    const double denom = dot(ray.dir, pd);
    return dot(pd, k.mean - ray.origin) / denom;
}

// Mahalanobis exponent (x - mu)^T P (x - mu).
inline double exponent(const GaussianKernel &k, const Vec3 &x) {
    const Vec3 q = x - k.mean;
    return dot(q, k.precision * q);
}

inline double opacity(const GaussianKernel &k, const Vec3 &x) {
    const double a = k.density * std::exp(-exponent(k, x));
    return std::clamp(a, 0.0, kAlphaMax);
}
double opacity(const Gaussian &g, const Vec3 &x);

}  // namespace sgrt
