// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include "support.h"

#include <sgrt/error.h>
#include <sgrt/relight.h>

#include <gtest/gtest.h>

using namespace sgrt;
using namespace sgrt::test;

namespace {

Gaussian reflective(const Vec3 &mean, const Vec3 &albedo, const Vec3 &normal,
                    ReflectanceModel model = ReflectanceModel::Lambert) {
    Gaussian g;
    g.mean = mean;
    g.log_scales = {std::log(0.05), std::log(0.05), std::log(0.05)};
    g.density_logit = logit(0.9);
    g.appearance = Reflective{albedo, normal, model};
    return g;
}

Gaussian blocker(const Vec3 &mean, double alpha) {
    Gaussian g;
    g.mean = mean;
    g.log_scales = {std::log(0.1), std::log(0.1), std::log(0.1)};
    g.density_logit = logit(alpha);
    return g;
}

Scene lit_scene(const Gaussian &g, std::vector<Light> lights) {
    Scene s;
    s.gaussians.push_back(g);
    s.lights = std::move(lights);
    return s;
}

Vec3 shade_exact(const Scene &s, const Vec3 &x) {
    const TracedScene scene(s);
    RngStream rng(RngKey{});
    ShadeOptions opts;
    opts.exact_transmittance = true;
    return shade(scene, 0, x, {0, 0, 1}, rng, opts);
}

EnvmapLight constant_env(const Vec3 &radiance) {
    EnvmapLight e;
    e.width = 8;
    e.height = 4;
    e.radiance.assign(32, radiance);
    return e;
}

}  // namespace

TEST(Shade, IsotropicPointLight) {
    const Vec3 albedo{0.2, 0.5, 0.8};
    const Scene s = lit_scene(reflective({}, albedo, {0, 1, 0}, ReflectanceModel::Isotropic),
                              {PointLight{{0, 0, 2}, {10, 10, 10}}});
    const Vec3 c = shade_exact(s, {});
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(c[k], albedo[k] * 10 / 4 / (4 * kPi), 1e-14);
}

TEST(Shade, LambertPointLight) {
    const Vec3 albedo{0.2, 0.5, 0.8};
    const Vec3 n = normalize(Vec3{0, 1, 1});
    const Scene s = lit_scene(reflective({}, albedo, n), {PointLight{{0, 0, 2}, {10, 10, 10}}});
    const Vec3 c = shade_exact(s, {});
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(c[k], albedo[k] * 10 / 4 * dot(n, {0, 0, 1}) / kPi, 1e-14);
}

TEST(Shade, BackFacingLambertIsBlack) {
    const Scene s = lit_scene(reflective({}, {1, 1, 1}, {0, 0, -1}), {PointLight{{0, 0, 2}, {10, 10, 10}}});
    EXPECT_EQ(shade_exact(s, {}), Vec3{});
}

TEST(Shade, InverseSquareFalloff) {
    const Gaussian g = reflective({}, {0.6, 0.6, 0.6}, {0, 0, 1});
    const Vec3 near = shade_exact(lit_scene(g, {PointLight{{0, 0, 1.5}, {5, 5, 5}}}), {});
    const Vec3 far = shade_exact(lit_scene(g, {PointLight{{0, 0, 3}, {5, 5, 5}}}), {});
    EXPECT_NEAR(near.x, 4 * far.x, 1e-14);
}

TEST(Shade, DirectionalLight) {
    const Vec3 n = normalize(Vec3{1, 2, 0});
    const Scene s = lit_scene(reflective({}, {0.5, 0.5, 0.5}, n), {DirectionalLight{{0, 1, 0}, {2, 3, 4}}});
    const Vec3 c = shade_exact(s, {});
    EXPECT_NEAR(c.z, 0.5 * 4 * n.y / kPi, 1e-14);
}

TEST(Shade, LightAtShadingPointWarnsAndContributesNothing) {
    const Scene s = lit_scene(reflective({}, {1, 1, 1}, {0, 0, 1}), {PointLight{{}, {1, 1, 1}}});
    testing::internal::CaptureStderr();
    const Vec3 c = shade_exact(s, {});
    const std::string err = testing::internal::GetCapturedStderr();
    EXPECT_EQ(c, Vec3{});
    EXPECT_NE(err.find("coincides"), std::string::npos);
}

TEST(Shade, EmissiveGaussianIsRejected) {
    Scene s;
    s.gaussians.push_back(Gaussian{});
    const TracedScene scene(s);
    RngStream rng(RngKey{});
    EXPECT_THROW(shade(scene, 0, {}, {0, 0, 1}, rng), Error);
}

TEST(Shade, HalfOccluderHalvesLight) {
    Scene s = lit_scene(reflective({}, {0.7, 0.7, 0.7}, {0, 0, 1}), {PointLight{{0, 0, 4}, {16, 16, 16}}});
    s.gaussians.push_back(blocker({0, 0, 2}, 0.5));
    const TracedScene scene(s);
    const double unoccluded = 0.7 * 16 / 16 / kPi;
    EXPECT_NEAR(shade_exact(s, {}).x, 0.5 * unoccluded, 1e-14);
    Stats st;
    for (std::uint64_t t = 0; t < 100000; ++t) {
        RngStream rng(RngKey{3, t, 0, Phase::Shade});
        st.add(shade(scene, 0, {}, {0, 0, 1}, rng).x);
    }
    EXPECT_TRUE(within_se(st, 0.5 * unoccluded)) << st.mean;
}

TEST(Shade, ShadowRaysSkipTheShadedGaussian) {
    // A near-opaque Gaussian lit from outside must not shadow itself.
    Gaussian g = reflective({}, {1, 1, 1}, {0, 0, 1});
    g.density_logit = logit(0.999);
    g.log_scales = {0, 0, 0};
    const Scene s = lit_scene(g, {PointLight{{0, 0, 2}, {4, 4, 4}}});
    EXPECT_NEAR(shade_exact(s, {}).x, 1 / kPi, 1e-14);
}

TEST(Shade, ConstantEnvmapIsotropicIsExact) {
    const Vec3 albedo{0.3, 0.6, 0.9}, radiance{2, 1, 0.5};
    const Scene s = lit_scene(reflective({}, albedo, {0, 1, 0}, ReflectanceModel::Isotropic), {constant_env(radiance)});
    const Vec3 c = shade_exact(s, {});
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(c[k], albedo[k] * radiance[k], 1e-12);
}

TEST(Shade, ConstantEnvmapLambertIsUnbiased) {
    const Vec3 albedo{0.3, 0.6, 0.9}, radiance{2, 1, 0.5};
    const TracedScene scene(lit_scene(reflective({}, albedo, normalize(Vec3{1, 1, 0})), {constant_env(radiance)}));
    std::array<Stats, 3> st;
    ShadeOptions opts;
    opts.env_samples = 4;
    for (std::uint64_t t = 0; t < 50000; ++t) {
        RngStream rng(RngKey{5, t, 0, Phase::Shade});
        const Vec3 c = shade(scene, 0, {}, {0, 0, 1}, rng, opts);
        for (int k = 0; k < 3; ++k) st[std::size_t(k)].add(c[k]);
    }
    for (int k = 0; k < 3; ++k) EXPECT_TRUE(within_se(st[std::size_t(k)], albedo[k] * radiance[k]));
}

TEST(Shade, EnvmapNeedsSamples) {
    const TracedScene scene(lit_scene(reflective({}, {1, 1, 1}, {0, 0, 1}), {constant_env({1, 1, 1})}));
    RngStream rng(RngKey{});
    ShadeOptions opts;
    opts.env_samples = 0;
    EXPECT_THROW(shade(scene, 0, {}, {0, 0, 1}, rng, opts), Error);
}

TEST(ShadeGradient, AlbedoIsIrradiance) {
    ShadeResult s;
    s.irradiance = {1, 2, 3};
    const ShadeGradient g = shade_gradient(Reflective{}, s, {0.5, 1, 2});
    EXPECT_EQ(g.d_albedo, (Vec3{0.5, 2, 6}));
    EXPECT_EQ(g.d_normal, Vec3{});
}

TEST(ShadeGradient, MatchesFiniteDifferences) {
    Random r(31);
    const double h = 1e-6;
    const Vec3 up{0.7, -0.4, 1.1};
    for (int k = 0; k < 20; ++k) {
        Vec3 n = r.unit();
        if (n.z < 0.2) n.z = 0.2 + r.uniform(0, 0.5);
        Scene s = lit_scene(reflective({}, r.vec3(0.1, 0.9), normalize(n)),
                            {PointLight{{1, 0.5, 3}, r.vec3(1, 10)}, PointLight{{-2, 1, 2}, r.vec3(1, 10)},
                             DirectionalLight{normalize(Vec3{0.3, 0.2, 1}), r.vec3(0.5, 2)}});
        s.gaussians.push_back(blocker({0.3, 0.2, 1.5}, 0.4));
        const TracedScene scene(s);
        RngStream rng(RngKey{});
        ShadeOptions opts;
        opts.exact_transmittance = true;
        const ShadeGradient g = shade_gradient(scene, 0, {}, {0, 0, 1}, rng, up, opts);
        for (int c = 0; c < 3; ++c) {
            Scene p = s, m = s;
            std::get<Reflective>(p.gaussians[0].appearance).albedo[c] += h;
            std::get<Reflective>(m.gaussians[0].appearance).albedo[c] -= h;
            EXPECT_NEAR(g.d_albedo[c], dot(up, shade_exact(p, {}) - shade_exact(m, {})) / (2 * h), 1e-6);
            p = s;
            m = s;
            std::get<Reflective>(p.gaussians[0].appearance).normal[c] += h;
            std::get<Reflective>(m.gaussians[0].appearance).normal[c] -= h;
            EXPECT_NEAR(g.d_normal[c], dot(up, shade_exact(p, {}) - shade_exact(m, {})) / (2 * h), 1e-6);
        }
    }
}

TEST(GaussianColor, EmissiveIsStored) {
    Scene s;
    Gaussian g;
    g.appearance = Emissive{{0.1, 0.2, 0.3}};
    s.gaussians.push_back(g);
    const TracedScene scene(s);
    RngStream rng(RngKey{});
    EXPECT_EQ(gaussian_color(scene, 0, axis_ray(), 1, rng), (Vec3{0.1, 0.2, 0.3}));
    EXPECT_FALSE(has_reflective(s));
}

TEST(Envmap, LookupConstantAndPoles) {
    EXPECT_LT(length(lookup(constant_env({1, 2, 3}), normalize(Vec3{0.3, -0.2, 0.9})) - Vec3{1, 2, 3}), 1e-14);
    EnvmapLight e;
    e.width = 4;
    e.height = 2;
    e.radiance = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {5, 5, 5}, {5, 5, 5}, {5, 5, 5}, {5, 5, 5}};
    EXPECT_EQ(lookup(e, {0, 1, 0}), (Vec3{1, 1, 1}));
    EXPECT_EQ(lookup(e, {0, -1, 0}), (Vec3{5, 5, 5}));
    EXPECT_NEAR(lookup(e, {1, 0, 0}).x, 3.0, 1e-12);
}

TEST(Envmap, AzimuthWraps) {
    EnvmapLight e;
    e.width = 2;
    e.height = 1;
    e.radiance = {{0, 0, 0}, {4, 4, 4}};
    // Azimuth 0 sits halfway between the last and first texel centers.
    EXPECT_NEAR(lookup(e, {1, 0, 0}).x, 2.0, 1e-12);
    EXPECT_NEAR(lookup(e, {-1, 0, 0}).x, 2.0, 1e-12);
    EXPECT_NEAR(lookup(e, {0, 0, 1}).x, 0.0, 1e-12);
}

TEST(LightValidation, RejectsBadLights) {
    EXPECT_NO_THROW(validate(Light{PointLight{}}));
    EXPECT_THROW(validate(Light{PointLight{{}, {-1, 0, 0}}}), Error);
    EXPECT_THROW(validate(Light{DirectionalLight{{0, 2, 0}, {1, 1, 1}}}), Error);
    EnvmapLight e = constant_env({1, 1, 1});
    e.radiance.pop_back();
    EXPECT_THROW(validate(Light{e}), Error);
}
