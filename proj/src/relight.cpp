// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>
#include <sgrt/relight.h>

namespace sgrt {

namespace {

// Geometric factor of f_r / albedo for a given incident direction.
double lobe(const Reflective &r, const Vec3 &w_in) {
    if (r.model == ReflectanceModel::Isotropic) return 1.0 / (4 * kPi);
    return std::max(0.0, dot(r.normal, w_in)) / kPi;
}

Vec3 uniform_sphere(double u, double v) {
    const double z = 1 - 2 * u;
    const double s = std::sqrt(std::max(0.0, 1 - z * z));
    const double phi = 2 * kPi * v;
    return {s * std::cos(phi), s * std::sin(phi), z};
}

}  // namespace

Vec3 reflectance(const Reflective &r, const Vec3 &w_in, const Vec3 &) {
    return r.albedo * lobe(r, w_in);
}

ShadeResult shade_detailed(const TracedScene &scene, std::uint32_t id, const Vec3 &x,
                           const Vec3 &w_out, RngStream &rng, const ShadeOptions &opts) {
    const auto *refl = std::get_if<Reflective>(&scene.gaussian(id).appearance);
    if (!refl) fail("shade: gaussian {} is not reflective", id);
    ShadeResult out;

    auto add = [&](const Vec3 &w_in, const Vec3 &radiance, const Ray &shadow) {
        const double g = lobe(*refl, w_in);
        if (g <= 0) return;
        double t = 1;
        if (shadow.valid)
            t = opts.exact_transmittance ? transmittance_exact(scene, shadow, id)
                                         : transmittance_estimate(scene, shadow, rng, id);
        if (t == 0) return;
        out.irradiance += radiance * (g * t);
        if (refl->model == ReflectanceModel::Lambert)
            for (int c = 0; c < 3; ++c) out.normal_terms[c] += w_in * (radiance[c] * t / kPi);
    };

    for (const Light &light : scene.scene().lights) {
        if (const auto *p = std::get_if<PointLight>(&light)) {
            const Vec3 d = p->position - x;
            const double dist2 = dot(d, d);
            if (dist2 == 0) {
                warn(fmt::format("point light coincides with shading point of gaussian {}; skipped", id));
                continue;
            }
            add(d / std::sqrt(dist2), p->intensity / dist2, shadow_ray_to_point(x, p->position));
        } else if (const auto *dl = std::get_if<DirectionalLight>(&light)) {
            add(dl->dir, dl->irradiance, shadow_ray_to_direction(x, dl->dir));
        } else {
            const auto &env = std::get<EnvmapLight>(light);
            const int n = opts.env_samples;
            if (n < 1) fail("shade: an environment light needs env_samples >= 1");
            const double weight = 4 * kPi / n;
            for (int s = 0; s < n; ++s) {
                const double u = rng.uniform(), v = rng.uniform();
                const Vec3 w = uniform_sphere(u, v);
                add(w, lookup(env, w) * weight, shadow_ray_to_direction(x, w));
            }
        }
    }
    (void)w_out;  // both reflectance models are view independent
    out.color = mul(refl->albedo, out.irradiance);
    return out;
}

ShadeGradient shade_gradient(const Reflective &r, const ShadeResult &s, const Vec3 &upstream) {
    ShadeGradient g;
    g.d_albedo = mul(upstream, s.irradiance);
    for (int c = 0; c < 3; ++c) g.d_normal += s.normal_terms[c] * (upstream[c] * r.albedo[c]);
    return g;
}

ShadeGradient shade_gradient(const TracedScene &scene, std::uint32_t id, const Vec3 &x,
                             const Vec3 &w_out, RngStream &rng, const Vec3 &upstream,
                             const ShadeOptions &opts) {
    const ShadeResult s = shade_detailed(scene, id, x, w_out, rng, opts);
    return shade_gradient(std::get<Reflective>(scene.gaussian(id).appearance), s, upstream);
}

Vec3 gaussian_color(const TracedScene &scene, std::uint32_t id, const Ray &ray, double depth,
                    RngStream &rng, const ShadeOptions &opts) {
    const Gaussian &g = scene.gaussian(id);
    if (const auto *e = std::get_if<Emissive>(&g.appearance)) return e->rgb;
    return shade(scene, id, ray.at(depth), -ray.dir, rng, opts);
}

bool has_reflective(const Scene &scene) {
    for (const Gaussian &g : scene.gaussians)
        if (std::holds_alternative<Reflective>(g.appearance)) return true;
    return false;
}

}  // namespace sgrt
