// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include "support.h"

#include <sgrt/error.h>
#include <sgrt/optimize.h>
#include <sgrt/render.h>
#include <sgrt/toy.h>

#include <gtest/gtest.h>

using namespace sgrt;
using namespace sgrt::test;

namespace {

// Small emissive problem: a reference scene, its sorted renders and a
// perturbed starting point.
struct Problem {
    Scene reference;
    Dataset data;
    Scene init;
};

Problem small_problem(std::uint64_t seed, int count = 4, int views = 4, int res = 16) {
    Problem p;
    p.reference = toy_emissive_scene(seed, count, views, res);
    p.data = render_dataset(p.reference, false, 1, seed);
    p.init = random_init(p.reference, seed + 100);
    return p;
}

TrainConfig quick_config(int iterations) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.backward_samples = 4;
    cfg.seed = 9;
    return cfg;
}

bool all_finite(const Scene &s) {
    for (const Gaussian &g : s.gaussians) {
        if (!is_finite(g.mean) || !is_finite(g.log_scales) || !std::isfinite(g.density_logit)) return false;
        if (!std::isfinite(norm(g.rotation))) return false;
    }
    return true;
}

}  // namespace

TEST(LossL1, Examples) {
    Image a(2, 1, {0.5, 0.5, 0.5}), b(2, 1, {0.5, 0.5, 0.5});
    EXPECT_EQ(loss_l1(a, b).loss, 0.0);
    b.set(1, 0, {0.25, 1.0, 0.5});
    const L1Loss l = loss_l1(a, b);
    EXPECT_NEAR(l.loss, (0.25 + 0.5) / 6, 1e-7);
    EXPECT_FLOAT_EQ(l.grad.data[3], 1.0f / 6);
    EXPECT_FLOAT_EQ(l.grad.data[4], -1.0f / 6);
    EXPECT_EQ(l.grad.data[5], 0.0f);
}

TEST(LossL1, GradientMatchesFiniteDifferences) {
    Random r(4);
    Image a(3, 2), b(3, 2);
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        a.data[k] = float(r.uniform());
        b.data[k] = float(r.uniform());
    }
    const L1Loss l = loss_l1(a, b);
    const float h = 1e-3f;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        Image p = a, m = a;
        p.data[k] += h;
        m.data[k] -= h;
        EXPECT_NEAR((loss_l1(p, b).loss - loss_l1(m, b).loss) / (2 * h), l.grad.data[k], 1e-4);
    }
}

TEST(LossL1, SizeMismatchIsAnError) {
    EXPECT_THROW(loss_l1(Image(2, 2), Image(2, 3)), Error);
}

TEST(Batches, DefaultCyclesViews) {
    TrainConfig cfg;
    cfg.batch_size = 2;
    EXPECT_EQ(batch_views(cfg, 3, 0), (std::vector<int>{0, 1}));
    EXPECT_EQ(batch_views(cfg, 3, 1), (std::vector<int>{2, 0}));
    cfg.batches = {{2}, {0, 1}};
    EXPECT_EQ(batch_views(cfg, 3, 3), (std::vector<int>{0, 1}));
}

TEST(SceneExtent, FromCameraSpread) {
    Dataset d;
    for (double x : {-1.0, 1.0}) {
        PinholeCamera cam;
        cam.pose.translation = {x, 0, 0};
        d.views.push_back({cam, Image(1, 1), {}});
    }
    TrainConfig cfg;
    EXPECT_NEAR(scene_extent(cfg, d), 1.1, 1e-15);
    cfg.scene_extent = 3;
    EXPECT_EQ(scene_extent(cfg, d), 3.0);
}

TEST(Adam, ZeroLearningRateLeavesSceneUnchanged) {
    const Problem p = small_problem(1);
    TrainConfig cfg = quick_config(1);
    cfg.lr = {0, 0, 0, 0, 0};
    const GradientPass pass = compute_gradients(p.init, p.data, std::vector<int>{0}, cfg, 0);
    Scene s = p.init;
    OptState state;
    adam_step(s, pass.grads, cfg, 1.0, state);
    EXPECT_EQ(s, p.init);
}

TEST(Adam, DecayScalesTheLastStep) {
    // One Gaussian with a constant gradient: Adam's first steps move each
    // parameter by the learning rate, so the step sizes expose the schedule.
    Scene s;
    s.gaussians.push_back(Gaussian{});
    GradBuffer grads(1);
    grads[0].density_logit = 1;
    TrainConfig cfg;
    cfg.iterations = 3;
    cfg.lr_decay = 0.25;
    OptState state;
    std::vector<double> steps;
    for (int k = 0; k < 3; ++k) {
        const double before = s.gaussians[0].density_logit;
        adam_step(s, grads, cfg, 1.0, state);
        steps.push_back(before - s.gaussians[0].density_logit);
    }
    EXPECT_NEAR(steps[0], cfg.lr.density_logit, 1e-12);
    EXPECT_NEAR(steps[1], cfg.lr.density_logit * 0.5, 1e-12);
    EXPECT_NEAR(steps[2], cfg.lr.density_logit * 0.25, 1e-12);
}

TEST(Adam, GradientCountMismatchIsAnError) {
    Scene s = small_problem(1).init;
    OptState state;
    EXPECT_THROW(adam_step(s, GradBuffer(1), TrainConfig{}, 1.0, state), Error);
}

TEST(Train, ZeroIterationsReturnsInput) {
    const Problem p = small_problem(2);
    const TrainResult r = train(p.init, p.data, quick_config(0));
    EXPECT_EQ(r.scene, p.init);
    EXPECT_TRUE(r.reports.empty());
}

TEST(Train, LossDecreasesOnSingleGaussian) {
    Scene ref;
    Gaussian g;
    g.log_scales = {std::log(0.5), std::log(0.5), std::log(0.5)};
    g.density_logit = logit(0.8);
    g.appearance = Emissive{{0.9, 0.4, 0.1}};
    ref.gaussians.push_back(g);
    ref.cameras = ring_cameras(1, 16);
    const Dataset data = render_dataset(ref, false, 1, 0);
    Scene init = ref;
    init.gaussians[0].appearance = Emissive{{0.7, 0.5, 0.2}};
    const TrainResult r = train(init, data, quick_config(10));
    ASSERT_EQ(r.reports.size(), 10u);
    for (std::size_t k = 1; k < r.reports.size(); ++k) EXPECT_LT(r.reports[k].loss, r.reports[k - 1].loss) << k;
}

TEST(Train, SelfTargetsDoNotDiverge) {
    const Problem p = small_problem(3, 6, 4, 12);
    TrainConfig cfg = quick_config(500);
    cfg.forward_mode = ForwardMode::Stochastic;
    cfg.forward_samples = 8;
    const TrainResult r = train(p.reference, p.data, cfg);
    ASSERT_TRUE(all_finite(r.scene));
    for (const Gaussian &g : r.scene.gaussians) {
        EXPECT_NEAR(norm(g.rotation), 1.0, 1e-9);
        for (int k = 0; k < 3; ++k) EXPECT_GE(std::get<Emissive>(g.appearance).rgb[k], 0.0);
    }
    // Per-iteration PSNR is measured on noisy renders; compare window means.
    double first = 0, last = 0;
    for (std::size_t k = 0; k < 50; ++k) {
        first += r.reports[k].psnr / 50;
        last += r.reports[r.reports.size() - 1 - k].psnr / 50;
    }
    EXPECT_GE(last, first);
}

TEST(Train, ReconstructionImprovesSortedPsnr) {
    const Problem p = small_problem(3, 6, 4, 12);
    auto mean_psnr = [&](const Scene &s) {
        const TracedScene traced(s);
        double total = 0;
        for (const View &v : p.data.views) total += psnr(render(traced, v.camera, {}), v.target);
        return total / double(p.data.views.size());
    };
    const TrainResult r = train(p.init, p.data, quick_config(300));
    EXPECT_GT(mean_psnr(r.scene), mean_psnr(p.init) + 5);
}

TEST(Train, ReflectiveDomainIsKept) {
    const Scene ref = toy_relight_scene(4, 4, 2, 12);
    const Dataset data = render_dataset(ref, false, 1, 4);
    TrainConfig cfg = quick_config(30);
    cfg.lr.appearance = 0.2;  // large steps push albedo against its bounds
    const TrainResult r = train(random_init(ref, 5), data, cfg);
    for (const Gaussian &g : r.scene.gaussians) {
        const auto &refl = std::get<Reflective>(g.appearance);
        EXPECT_NEAR(length(refl.normal), 1.0, 1e-9);
        for (int k = 0; k < 3; ++k) {
            EXPECT_GE(refl.albedo[k], 0.0);
            EXPECT_LE(refl.albedo[k], 1.0);
        }
    }
}

TEST(Train, IndependentOfThreadCount) {
    const Problem p = small_problem(6);
    TrainConfig cfg = quick_config(5);
    cfg.forward_mode = ForwardMode::Stochastic;
    cfg.batch_size = 2;
    const TrainResult a = train(p.init, p.data, cfg);
    cfg.threads = 3;
    const TrainResult b = train(p.init, p.data, cfg);
    EXPECT_EQ(a.scene, b.scene);
    for (std::size_t k = 0; k < a.reports.size(); ++k) EXPECT_EQ(a.reports[k].loss, b.reports[k].loss);
}

TEST(Train, CheckpointsAtInterval) {
    const Problem p = small_problem(7);
    TrainConfig cfg = quick_config(6);
    cfg.checkpoint_every = 2;
    std::vector<int> seen;
    const TrainResult r = train(p.init, p.data, cfg, [&](int it, const Scene &) { seen.push_back(it); });
    EXPECT_EQ(seen, (std::vector<int>{2, 4, 6}));
}

TEST(Train, TimingsAddUp) {
    const Problem p = small_problem(8, 8, 2, 32);
    const TrainResult r = train(p.init, p.data, quick_config(5));
    for (const LossReport &rep : r.reports) {
        const double parts = rep.forward_ms + rep.backward_ms + rep.update_ms;
        EXPECT_LE(parts, rep.total_ms * 1.0001);
        EXPECT_GE(parts, 0.95 * rep.total_ms);
    }
}

TEST(Gradients, StochasticPathMatchesAnalyticInExpectation) {
    const Problem p = small_problem(10, 8, 1, 12);
    TrainConfig cfg = quick_config(1);
    cfg.backward_mode = BackwardMode::Analytic;
    const std::vector<int> views{0};
    const GradBuffer exact = compute_gradients(p.init, p.data, views, cfg, 0).grads;
    cfg.backward_mode = BackwardMode::Stochastic;
    std::vector<std::vector<Stats>> stats(exact.size(), std::vector<Stats>(kParamsPerGaussian));
    for (int it = 0; it < 1000; ++it) {
        const GradBuffer g = compute_gradients(p.init, p.data, views, cfg, it).grads;
        for (std::size_t id = 0; id < g.size(); ++id)
            for (int k = 0; k < kParamsPerGaussian; ++k) stats[id][std::size_t(k)].add(flat_param(g[id], k));
    }
    int checked = 0;
    for (std::size_t id = 0; id < exact.size(); ++id) {
        for (int k = 0; k < kParamsPerGaussian; ++k) {
            const Stats &s = stats[id][std::size_t(k)];
            if (s.variance() == 0) {
                EXPECT_NEAR(s.mean, flat_param(exact[id], k), 1e-12);
                continue;
            }
            ++checked;
            EXPECT_TRUE(within_se(s, flat_param(exact[id], k))) << id << " " << param_name(k);
        }
    }
    EXPECT_GT(checked, 20);
}

TEST(Gradients, ViewLightsOverrideSceneLights) {
    Scene ref = toy_relight_scene(11, 3, 1, 8);
    const Dataset lit = render_dataset(ref, false, 1, 0);
    Dataset dark = lit;
    dark.views[0].lights = {PointLight{{0, 50, 0}, {0, 0, 0}}};
    TrainConfig cfg = quick_config(1);
    cfg.backward_mode = BackwardMode::Analytic;
    const GradientPass a = compute_gradients(ref, lit, std::vector<int>{0}, cfg, 0);
    const GradientPass b = compute_gradients(ref, dark, std::vector<int>{0}, cfg, 0);
    EXPECT_NE(a.renders[0], Image(8, 8, ref.background));
    EXPECT_EQ(b.renders[0], Image(8, 8, ref.background));
}

TEST(ConfigValidation, NamesTheField) {
    auto message = [](const TrainConfig &cfg, std::size_t views = 1) {
        try {
            validate(cfg, views);
        } catch (const Error &e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_EQ(message(TrainConfig{}), "");
    TrainConfig c;
    c.lr.mean = -1;
    EXPECT_NE(message(c).find("config.lr.mean"), std::string::npos);
    c = {};
    c.lr_decay = 0;
    EXPECT_NE(message(c).find("config.lr_decay"), std::string::npos);
    c = {};
    c.forward_samples = 0;
    EXPECT_NE(message(c).find("config.forward_samples"), std::string::npos);
    c = {};
    c.batches = {{0, 3}};
    EXPECT_NE(message(c, 2).find("config.batches[0][1]"), std::string::npos);
    c = {};
    c.iterations = 1;
    EXPECT_NE(message(c, 0).find("no views"), std::string::npos);
}

TEST(Gradients, TargetSizeMismatchIsAnError) {
    Problem p = small_problem(12);
    p.data.views[0].target = Image(3, 3);
    EXPECT_THROW(compute_gradients(p.init, p.data, std::vector<int>{0}, quick_config(1), 0), Error);
}
