// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>
#include <sgrt/light.h>

#include <algorithm>

namespace sgrt {

namespace {
void check_nonnegative(const Vec3 &v, const char *what) {
    if (!is_finite(v)) fail("{} is not finite", what);
    if (v.x < 0 || v.y < 0 || v.z < 0) fail("{} must be componentwise >= 0", what);
}
}  // namespace

void validate(const Light &light) {
    if (const auto *p = std::get_if<PointLight>(&light)) {
        if (!is_finite(p->position)) fail("point light position is not finite");
        check_nonnegative(p->intensity, "point light intensity");
    } else if (const auto *d = std::get_if<DirectionalLight>(&light)) {
        if (!is_finite(d->dir) || std::abs(length(d->dir) - 1) > 1e-9)
            fail("directional light dir must be a unit vector");
        check_nonnegative(d->irradiance, "directional light irradiance");
    } else {
        const auto &e = std::get<EnvmapLight>(light);
        if (e.width < 1 || e.height < 1) fail("envmap must be at least 1x1");
        if (e.radiance.size() != std::size_t(e.width) * e.height)
            fail("envmap has {} texels, expected {}", e.radiance.size(), e.width * e.height);
        for (const Vec3 &v : e.radiance) check_nonnegative(v, "envmap radiance");
    }
}

Vec3 lookup(const EnvmapLight &env, const Vec3 &dir) {
    const Vec3 d = normalize(dir);
    const double theta = std::acos(std::clamp(d.y, -1.0, 1.0));
    double phi = std::atan2(d.z, d.x);
    if (phi < 0) phi += 2 * kPi;
    // Texel centers sit at half-integer coordinates.
    const double fx = phi / (2 * kPi) * env.width - 0.5;
    const double fy = std::clamp(theta / kPi * env.height - 0.5, 0.0, double(env.height - 1));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    auto texel = [&](int x, int y) {
        x = ((x % env.width) + env.width) % env.width;
        y = std::clamp(y, 0, env.height - 1);
        return env.radiance[std::size_t(y) * env.width + x];
    };
    return texel(x0, y0) * ((1 - tx) * (1 - ty)) + texel(x0 + 1, y0) * (tx * (1 - ty)) +
           texel(x0, y0 + 1) * ((1 - tx) * ty) + texel(x0 + 1, y0 + 1) * (tx * ty);
}

}  // namespace sgrt
