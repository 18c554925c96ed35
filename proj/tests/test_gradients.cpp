// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include "support.h"

#include <sgrt/error.h>
#include <sgrt/gradients.h>

#include <gtest/gtest.h>

#include <set>

using namespace sgrt;
using namespace sgrt::test;

namespace {

struct HitList {
    std::vector<Hit> hits;
    std::vector<Vec3> colors;
    Vec3 background;
};

HitList random_hits(Random &r, int n) {
    HitList h;
    for (int i = 0; i < n; ++i) {
        h.hits.push_back(make_hit(std::uint32_t(i), r.uniform(kAlphaMin, kAlphaMax), r.uniform(0.5, 10)));
        h.colors.push_back(r.vec3(0, 1));
    }
    h.background = r.vec3(0, 1);
    return h;
}

double opacity_at_peak(const Gaussian &g, const Ray &ray) { return opacity(g, max_response(ray, g).x); }

double &raw_param(Gaussian &g, int k) {
    if (k < 3) return g.mean[k];
    if (k < 7) return g.rotation[k - 3];
    if (k < 10) return g.log_scales[k - 7];
    return g.density_logit;
}

double jacobian_entry(const OpacityJacobian &j, int k) {
    if (k < 3) return j.d_mean[k];
    if (k < 7) return j.d_rotation[std::size_t(k - 3)];
    if (k < 10) return j.d_log_scales[k - 7];
    return j.d_density_logit;
}

}  // namespace

TEST(AnalyticGrads, SingleHit) {
    const Hit h = make_hit(0, 0.4, 1);
    const Vec3 c{0.2, 0.5, 0.9};
    const RayGrad g = analytic_grads_aligned({&h, 1}, {&c, 1}, {});
    ASSERT_EQ(g.entries.size(), 1u);
    EXPECT_DOUBLE_EQ(g.entries[0].d_color, 0.4);
    EXPECT_EQ(g.entries[0].d_alpha, c);
}

TEST(AnalyticGrads, TwoHits) {
    const std::vector<Hit> hits = {make_hit(1, 0.3, 2), make_hit(0, 0.6, 1)};
    const std::vector<Vec3> colors = {{0.7, 0.2, 0.1}, {0.1, 0.9, 0.4}};
    const RayGrad g = analytic_grads(hits, colors, {});
    const RayGradEntry *front = g.find(0);
    ASSERT_NE(front, nullptr);
    // dC/dalpha_1 = c_1 - c_2 alpha_2
    EXPECT_LT(length(front->d_alpha - (colors[0] - colors[1] * 0.3)), 1e-15);
    EXPECT_DOUBLE_EQ(g.find(1)->d_color, 0.4 * 0.3);
}

TEST(AnalyticGrads, MatchesFiniteDifferences) {
    Random r(12);
    const double h = 1e-6;
    for (int s = 0; s < 30; ++s) {
        HitList l = random_hits(r, r.integer(1, 8));
        for (Hit &hit : l.hits) hit.alpha = std::clamp(hit.alpha, 0.01, 0.99);
        const RayGrad g = analytic_grads_aligned(l.hits, l.colors, l.background);
        for (std::size_t i = 0; i < l.hits.size(); ++i) {
            const RayGradEntry *e = g.find(l.hits[i].id);
            ASSERT_NE(e, nullptr);
            HitList p = l, m = l;
            p.hits[i].alpha += h;
            m.hits[i].alpha -= h;
            const Vec3 fd = (sorted_blend_aligned(p.hits, p.colors, p.background).color -
                             sorted_blend_aligned(m.hits, m.colors, m.background).color) / (2 * h);
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(e->d_alpha[c], fd[c], 1e-6 * std::max(1.0, std::abs(fd[c])));
            p = l;
            m = l;
            p.colors[i].y += h;
            m.colors[i].y -= h;
            const double fdc = (sorted_blend_aligned(p.hits, p.colors, p.background).color.y -
                                sorted_blend_aligned(m.hits, m.colors, m.background).color.y) / (2 * h);
            EXPECT_NEAR(e->d_color, fdc, 1e-6 * std::max(1.0, std::abs(fdc)));
        }
    }
}

TEST(StochasticGrads, EmptyRayIsZero) {
    const TracedScene scene{Scene{}};
    const RayGrad g = stochastic_grads(scene, axis_ray(), 8, RngKey{});
    EXPECT_TRUE(g.entries.empty());
}

TEST(StochasticGrads, SingleHitExpectationIsColor) {
    Scene s;
    Gaussian g;
    g.mean = {0, 0, 3};
    g.density_logit = logit(0.35);
    g.appearance = Emissive{{0.8, 0.3, 0.1}};
    s.gaussians.push_back(g);
    const TracedScene scene(s);
    std::array<Stats, 3> stats;
    for (std::uint64_t t = 0; t < 200000; ++t) {
        const RayGrad rg = stochastic_grads(scene, axis_ray(), 1, RngKey{1, t, 0, Phase::PickFront});
        const RayGradEntry *e = rg.find(0);
        for (int c = 0; c < 3; ++c) stats[std::size_t(c)].add(e ? e->d_alpha[c] : 0.0);
    }
    for (int c = 0; c < 3; ++c) EXPECT_TRUE(within_se(stats[std::size_t(c)], std::get<Emissive>(g.appearance).rgb[c]));
}

TEST(StochasticGrads, EachRoundTouchesOneId) {
    Random r(5);
    const TracedScene scene(axis_scene(r, 8));
    for (std::uint64_t t = 0; t < 2000; ++t) {
        EXPECT_LE(stochastic_grads(scene, axis_ray(), 1, RngKey{2, t, 0, Phase::PickFront}).entries.size(), 1u);
        EXPECT_LE(stochastic_grads(scene, axis_ray(), 4, RngKey{3, t, 0, Phase::PickFront}).entries.size(), 4u);
    }
}

TEST(StochasticGrads, UnbiasedOnRandomRays) {
    Random r(404);
    for (int s = 0; s < 5; ++s) {
        const TracedScene scene(axis_scene(r, r.integer(1, 8)));
        const Ray ray = axis_ray();
        const auto hits = collect_hits(scene, ray);
        const RayGrad ref = analytic_grads(hits, emissive_colors(scene.scene()), scene.background());
        std::vector<std::array<Stats, 4>> stats(ref.entries.size());
        for (std::uint64_t t = 0; t < 100000; ++t) {
            const RayGrad g = stochastic_grads(scene, ray, 1, RngKey{7, t, 0, Phase::PickFront});
            for (std::size_t i = 0; i < ref.entries.size(); ++i) {
                const RayGradEntry *e = g.find(ref.entries[i].id);
                stats[i][0].add(e ? e->d_color : 0.0);
                for (int c = 0; c < 3; ++c) stats[i][std::size_t(c + 1)].add(e ? e->d_alpha[c] : 0.0);
            }
        }
        for (std::size_t i = 0; i < ref.entries.size(); ++i) {
            // Gaussians picked only a handful of times have no usable SE.
            if (ref.entries[i].d_color < 1e-3) continue;
            EXPECT_TRUE(within_se(stats[i][0], ref.entries[i].d_color));
            for (int c = 0; c < 3; ++c) EXPECT_TRUE(within_se(stats[i][std::size_t(c + 1)], ref.entries[i].d_alpha[c]));
        }
    }
}

TEST(StochasticGrads, ReplayEqualsResampling) {
    Random r(6);
    const TracedScene scene(axis_scene(r, 8));
    for (std::uint64_t t = 0; t < 200; ++t) {
        const RngKey key{11, t, 0, Phase::PickFront};
        const auto records = sample_records(scene, axis_ray(), 8, key);
        for (const SampleRecord &rec : records) {
            if (rec.front == kNoGaussian) {
                EXPECT_EQ(rec.behind, kNoGaussian);
            }
            if (rec.behind != kNoGaussian) {
                EXPECT_GT(rec.behind_depth, rec.front_depth);
            }
        }
        const RayGrad a = stochastic_grads(scene, axis_ray(), 8, key);
        const PickColorFn color = [&](std::uint32_t id, double, int, bool) { return emissive_color(scene.gaussian(id)); };
        const RayGrad b = stochastic_grads(scene, axis_ray(), 8, key, color, std::span<const SampleRecord>(records));
        ASSERT_EQ(a.entries.size(), b.entries.size());
        for (std::size_t i = 0; i < a.entries.size(); ++i) {
            EXPECT_EQ(a.entries[i].id, b.entries[i].id);
            EXPECT_EQ(a.entries[i].d_color, b.entries[i].d_color);
            EXPECT_EQ(a.entries[i].d_alpha, b.entries[i].d_alpha);
        }
    }
}

TEST(StochasticGrads, NonFiniteColorIsAnError) {
    Random r(1);
    const TracedScene scene(axis_scene(r, 3));
    const PickColorFn bad = [](std::uint32_t, double, int, bool) { return Vec3{std::nan(""), 0, 0}; };
    EXPECT_THROW(stochastic_grads(scene, axis_ray(), 64, RngKey{}, bad), Error);
}

TEST(SsplatsGrads, SingleHitMatchesOurs) {
    const Hit h = make_hit(0, 0.45, 2);
    const Vec3 c{0.3, 0.6, 0.9};
    for (std::uint64_t t = 0; t < 1000; ++t) {
        const RngKey key{4, t, 0, Phase::PickFront};
        const RayGrad a = stochastic_grads({&h, 1}, {&c, 1}, {}, 4, key);
        const RayGrad b = ssplats_grads({&h, 1}, {&c, 1}, {}, 4, key);
        const RayGradEntry *ea = a.find(0), *eb = b.find(0);
        ASSERT_NE(eb, nullptr);
        const Vec3 a_alpha = ea ? ea->d_alpha : Vec3{};
        const double a_color = ea ? ea->d_color : 0.0;
        EXPECT_EQ(a_alpha, eb->d_alpha);
        EXPECT_EQ(a_color, eb->d_color);
    }
}

TEST(SsplatsGrads, NearOpaqueFrontAmplifiesBackPick) {
    const std::vector<Hit> hits = {make_hit(0, 0.99, 1), make_hit(1, 0.8, 2)};
    const std::vector<Vec3> colors = {{0.1, 0.1, 0.1}, {0.5, 0.25, 1.0}};
    bool found = false;
    for (std::uint64_t t = 0; t < 10000 && !found; ++t) {
        const RngKey key{5, t, 0, Phase::PickFront};
        RngStream rng(key.with_sample(0));
        if (pick_front(hits, rng).id != 1) continue;
        found = true;
        const RayGrad g = ssplats_grads(hits, colors, {}, 1, key);
        const Vec3 front = g.find(0)->d_alpha;
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(front[c], -100 * colors[1][c], 1e-9);
        EXPECT_EQ(g.near_singular, 0u);  // 0.99 is not above the threshold
    }
    EXPECT_TRUE(found);
}

TEST(SsplatsGrads, CountsNearSingularTerms) {
    const std::vector<Hit> hits = {make_hit(0, 0.995, 1), make_hit(1, 0.8, 2)};
    const std::vector<Vec3> colors = {{0.1, 0.1, 0.1}, {0.5, 0.25, 1.0}};
    std::size_t total = 0;
    for (std::uint64_t t = 0; t < 2000; ++t) total += ssplats_grads(hits, colors, {}, 4, RngKey{6, t, 0, Phase::PickFront}).near_singular;
    EXPECT_GT(total, 0u);
}

TEST(SsplatsGrads, UnbiasedButNoisierWithOccluder) {
    Random r(8);
    HitList l = random_hits(r, 5);
    l.hits[0].alpha = 0.99;
    l.hits[0].depth = 0.1;
    const auto stats = compare_estimators(l.hits, l.colors, l.background, 8, 20000, 3);
    double var_ours = 0, var_ss = 0;
    for (const ComponentStats &c : stats) {
        EXPECT_LE(std::abs(c.mean_ours - c.analytic), 4 * c.stderr_ours() + 1e-12) << c.id << c.param;
        EXPECT_LE(std::abs(c.mean_ssplats - c.analytic), 4 * c.stderr_ssplats() + 1e-12) << c.id << c.param;
        if (c.id == 0 && c.param != "d_color") {
            var_ours += c.var_ours;
            var_ss += c.var_ssplats;
        }
    }
    EXPECT_GE(var_ss, 4 * var_ours);
}

TEST(OpacityJacobian, DensityLogitIsLogisticChain) {
    Random r(2);
    for (int k = 0; k < 50; ++k) {
        const Gaussian g = random_gaussian(r, r.vec3(-1, 1) + Vec3{0, 0, 4}, r.uniform(0.05, 0.95));
        const OpacityJacobian j = opacity_jacobian(g, axis_ray());
        EXPECT_NEAR(j.d_density_logit, j.alpha * (1 - density(g)), 1e-15);
    }
}

TEST(OpacityJacobian, ZeroMeanGradientAtPeak) {
    Random r(3);
    Gaussian g = random_gaussian(r, {0, 0, 3}, 0.6);
    const OpacityJacobian j = opacity_jacobian(g, axis_ray());
    EXPECT_LT(length(j.d_mean), 1e-15);
    const double h = 1e-5;
    for (int k = 0; k < 3; ++k) {
        Gaussian p = g, m = g;
        p.mean[k] += h;
        m.mean[k] -= h;
        EXPECT_NEAR((opacity_at_peak(p, axis_ray()) - opacity_at_peak(m, axis_ray())) / (2 * h), 0.0, 1e-8);
    }
}

TEST(OpacityJacobian, MatchesFiniteDifferences) {
    Random r(19);
    const double h = 1e-5;
    int checked = 0;
    for (int s = 0; s < 200; ++s) {
        Gaussian g = random_gaussian(r, r.vec3(-0.3, 0.3) + Vec3{0, 0, 3}, r.uniform(0.05, 0.95));
        Ray ray;
        ray.origin = r.vec3(-0.2, 0.2);
        ray.dir = normalize(Vec3{r.uniform(-0.1, 0.1), r.uniform(-0.1, 0.1), 1});
        const OpacityJacobian j = opacity_jacobian(g, ray);
        if (j.alpha < 1e-3) continue;
        ++checked;
        for (int k = 0; k < 11; ++k) {
            Gaussian p = g, m = g;
            raw_param(p, k) += h;
            raw_param(m, k) -= h;
            const double fd = (opacity_at_peak(p, ray) - opacity_at_peak(m, ray)) / (2 * h);
            const double a = jacobian_entry(j, k);
            EXPECT_LE(std::abs(a - fd), 1e-4 * std::max({std::abs(a), std::abs(fd), 1e-3})) << k;
        }
    }
    EXPECT_GT(checked, 50);
}

TEST(OpacityJacobian, ClampedHasZeroGradient) {
    Gaussian g;
    g.mean = {0, 0, 2};
    g.density_logit = 60;
    const OpacityJacobian j = opacity_jacobian(g, axis_ray());
    EXPECT_TRUE(j.clamped);
    EXPECT_EQ(j.alpha, kAlphaMax);
    EXPECT_EQ(j.d_density_logit, 0.0);
    EXPECT_EQ(j.d_mean, Vec3{});
}

TEST(Backprop, NonFiniteUpstreamIsAnError) {
    Gaussian g;
    g.mean = {0, 0, 2};
    GaussianGrad out;
    EXPECT_THROW(backprop_to_params(g, axis_ray(), {std::nan(""), 0, 0}, {1, 1, 1}, out), Error);
}

TEST(Gradcheck, EmptyRayPasses) {
    const GradcheckReport r = fd_gradcheck(Scene{}, axis_ray(), 1e-5);
    EXPECT_TRUE(r.rows.empty());
    EXPECT_TRUE(r.passed(1e-4));
}

TEST(Gradcheck, StepOutsideRangeIsRejected) {
    EXPECT_THROW(fd_gradcheck(Scene{}, axis_ray(), 1e-2), Error);
    EXPECT_THROW(fd_gradcheck(Scene{}, axis_ray(), 1e-8), Error);
}

TEST(Gradcheck, SingleGaussian) {
    Random r(1);
    Scene s;
    s.background = {0.3, 0.2, 0.1};
    s.gaussians.push_back(random_gaussian(r, {0.05, -0.03, 3}, 0.7));
    const GradcheckReport rep = fd_gradcheck(s, axis_ray(), 1e-5);
    EXPECT_EQ(rep.rows.size(), 14u);
    EXPECT_TRUE(rep.passed(1e-4)) << rep.max_rel_error;
}

TEST(Gradcheck, EightGaussiansOnOneRay) {
    Random r(2);
    Scene s;
    s.background = {0.3, 0.2, 0.1};
    for (int i = 0; i < 8; ++i) s.gaussians.push_back(random_gaussian(r, r.vec3(-0.05, 0.05) + Vec3{0, 0, 1.0 + 0.4 * i}, r.uniform(0.2, 0.9)));
    const GradcheckReport rep = fd_gradcheck(s, axis_ray(), 1e-5);
    std::set<std::uint32_t> ids;
    for (const GradcheckRow &row : rep.rows) ids.insert(row.gaussian);
    EXPECT_EQ(ids.size(), 8u);
    EXPECT_TRUE(rep.passed(1e-4)) << rep.max_rel_error;
}

TEST(GaussianGrad, FlatParamsCoverEveryField) {
    GaussianGrad g;
    g.mean = {1, 2, 3};
    g.rotation = {4, 5, 6, 7};
    g.log_scales = {8, 9, 10};
    g.density_logit = 11;
    g.appearance = {12, 13, 14};
    g.normal = {15, 16, 17};
    for (int k = 0; k < kParamsPerGaussian; ++k) EXPECT_EQ(flat_param(g, k), k + 1);
    EXPECT_STREQ(param_name(10), "density_logit");
    EXPECT_TRUE(g.is_finite());
    g.normal.y = kInfinity;
    EXPECT_FALSE(g.is_finite());
}
