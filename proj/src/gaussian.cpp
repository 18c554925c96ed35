// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>
#include <sgrt/gaussian.h>

#include <algorithm>

namespace sgrt {

void validate(const Ray &ray) {
    if (!is_finite(ray.origin) || !is_finite(ray.dir))
        fail("ray has non-finite origin or direction");
    if (std::abs(length(ray.dir) - 1.0) > 1e-12)
        fail("ray direction is not unit length (|d| = {})", length(ray.dir));
    if (!(ray.t_min >= 0 && ray.t_min < ray.t_max))
        fail("invalid ray interval [{}, {}]", ray.t_min, ray.t_max);
}

void validate(const Gaussian &g) {
    if (!is_finite(g.mean)) fail("gaussian mean is not finite");
    if (!is_finite(g.log_scales)) fail("gaussian log_scales are not finite");
    if (!std::isfinite(g.density_logit)) fail("gaussian density_logit is not finite");
    const Quat &q = g.rotation;
    if (!std::isfinite(q.w) || !std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.z))
        fail("gaussian rotation is not finite");
    if (std::abs(norm(q) - 1.0) > 1e-9) fail("gaussian rotation is not normalized (|q| = {})", norm(q));
    if (const auto *r = std::get_if<Reflective>(&g.appearance)) {
        if (!is_finite(r->albedo) || !is_finite(r->normal)) fail("reflective appearance is not finite");
        if (std::abs(length(r->normal) - 1.0) > 1e-9) fail("reflective normal is not unit length");
        for (int c = 0; c < 3; ++c)
            if (r->albedo[c] < 0 || r->albedo[c] > 1) fail("reflective albedo outside [0,1]");
    } else {
        const auto &e = std::get<Emissive>(g.appearance);
        if (!is_finite(e.rgb)) fail("emissive color is not finite");
        for (int c = 0; c < 3; ++c)
            if (e.rgb[c] < 0) fail("emissive color is negative");
    }
}

namespace {

Mat3 rotation_of(const Gaussian &g) {
    const double n = norm(g.rotation);
    if (!std::isfinite(n) || n == 0 || !is_finite(g.log_scales))
        fail("cannot form covariance from non-finite or degenerate parameters");
    return to_matrix(normalize(g.rotation));
}

Mat3 scaled_frame(const Mat3 &r, const Vec3 &d) {
    // R diag(d) R^T
    Mat3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double v = r(i, 0) * d.x * r(j, 0) + r(i, 1) * d.y * r(j, 1) + r(i, 2) * d.z * r(j, 2);
            out(i, j) = v;
            out(j, i) = v;
        }
    return out;
}

}  // namespace

Mat3 covariance(const Gaussian &g) {
    const Vec3 &s = g.log_scales;
    return scaled_frame(rotation_of(g), {std::exp(2 * s.x), std::exp(2 * s.y), std::exp(2 * s.z)});
}

Mat3 precision(const Gaussian &g) {
    const Vec3 &s = g.log_scales;
    return scaled_frame(rotation_of(g), {std::exp(-2 * s.x), std::exp(-2 * s.y), std::exp(-2 * s.z)});
}

GaussianKernel make_kernel(const Gaussian &g) {
    return {g.mean, precision(g), density(g)};
}

MaxResponse max_response(const Ray &ray, const GaussianKernel &k) {
    const Vec3 pd = k.precision * ray.dir;
    const double denom = dot(ray.dir, pd);
    if (!(denom > 0)) fail("max_response: d^T P d = {} is not positive", denom);
    const double t = std::clamp(dot(pd, k.mean - ray.origin) / denom, ray.t_min, ray.t_max);
    return {t, ray.at(t)};
}

MaxResponse max_response(const Ray &ray, const Gaussian &g) { return max_response(ray, make_kernel(g)); }

double opacity(const Gaussian &g, const Vec3 &x) { return opacity(make_kernel(g), x); }

}  // namespace sgrt
