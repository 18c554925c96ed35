// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>
#include <sgrt/optimize.h>
#include <sgrt/parallel.h>
#include <sgrt/render.h>

#include <chrono>
#include <memory>
#include <unordered_map>

namespace sgrt {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Gradients touched by one row of pixels, in first-touch order.
struct SparseGrads {
    std::vector<std::uint32_t> ids;
    std::vector<GaussianGrad> values;
    std::unordered_map<std::uint32_t, std::uint32_t> slot;

    GaussianGrad &at(std::uint32_t id) {
        auto [it, inserted] = slot.try_emplace(id, static_cast<std::uint32_t>(ids.size()));
        if (inserted) {
            ids.push_back(id);
            values.emplace_back();
        }
        return values[it->second];
    }
};

std::uint64_t view_seed(const TrainConfig &cfg, int iteration, int view) {
    return hash_combine(hash_combine(cfg.seed, std::uint64_t(iteration)), std::uint64_t(view));
}

void adam_update(double &param, double grad, double &m, double &v, double lr, double bc1, double bc2) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-15;
    m = kBeta1 * m + (1 - kBeta1) * grad;
    v = kBeta2 * v + (1 - kBeta2) * grad * grad;
    param -= lr * (m / bc1) / (std::sqrt(v / bc2) + kEps);
}

// Renormalizes only when rounding cannot explain the drift, so a zero step
// leaves the stored bits untouched.
void renormalize(Quat &q) {
    const double n = norm(q);
    if (std::abs(n - 1) > 1e-12) q = normalize(q);
}

void renormalize(Vec3 &v) {
    const double n = length(v);
    if (std::abs(n - 1) > 1e-12) v = v / n;
}

}  // namespace

void validate(const TrainConfig &cfg, std::size_t num_views) {
    if (cfg.iterations < 0) fail("config.iterations must be >= 0");
    if (cfg.forward_samples < 1) fail("config.forward_samples must be >= 1");
    if (cfg.backward_samples < 1) fail("config.backward_samples must be >= 1");
    const std::pair<const char *, double> rates[] = {{"config.lr.mean", cfg.lr.mean},
                                                     {"config.lr.rotation", cfg.lr.rotation},
                                                     {"config.lr.log_scales", cfg.lr.log_scales},
                                                     {"config.lr.density_logit", cfg.lr.density_logit},
                                                     {"config.lr.appearance", cfg.lr.appearance}};
    for (const auto &[name, v] : rates)
        if (!(v >= 0) || !std::isfinite(v)) fail("{} must be a finite value >= 0", name);
    if (!(cfg.lr_decay > 0) || !std::isfinite(cfg.lr_decay)) fail("config.lr_decay must be a finite value > 0");
    if (cfg.batch_size < 1) fail("config.batch_size must be >= 1");
    if (cfg.threads < 1) fail("config.threads must be >= 1");
    if (cfg.checkpoint_every < 0) fail("config.checkpoint_every must be >= 0");
    if (cfg.shade.env_samples < 1) fail("config.env_samples must be >= 1");
    for (std::size_t b = 0; b < cfg.batches.size(); ++b) {
        if (cfg.batches[b].empty()) fail("config.batches[{}] is empty", b);
        for (std::size_t k = 0; k < cfg.batches[b].size(); ++k)
            if (cfg.batches[b][k] < 0 || std::size_t(cfg.batches[b][k]) >= num_views)
                fail("config.batches[{}][{}] = {} is not a view index", b, k, cfg.batches[b][k]);
    }
    if (cfg.iterations > 0 && num_views == 0) fail("dataset has no views");
}

L1Loss loss_l1(const Image &render, const Image &target) {
    if (render.width != target.width || render.height != target.height)
        fail("loss_l1: render is {}x{} but target is {}x{}", render.width, render.height, target.width,
             target.height);
    L1Loss out;
    out.grad = Image(render.width, render.height);
    const double n = double(render.data.size());
    double total = 0;
    for (std::size_t k = 0; k < render.data.size(); ++k) {
        const double d = double(render.data[k]) - double(target.data[k]);
        total += std::abs(d);
        out.grad.data[k] = float((d > 0) - (d < 0)) / float(n);
    }
    out.loss = total / n;
    return out;
}

std::vector<int> batch_views(const TrainConfig &cfg, std::size_t num_views, int iteration) {
    if (!cfg.batches.empty()) return cfg.batches[std::size_t(iteration) % cfg.batches.size()];
    std::vector<int> views;
    for (int b = 0; b < cfg.batch_size; ++b)
        views.push_back(int((std::size_t(iteration) * cfg.batch_size + b) % num_views));
    return views;
}

double scene_extent(const TrainConfig &cfg, const Dataset &data) {
    if (cfg.scene_extent > 0) return cfg.scene_extent;
    if (data.views.empty()) return 1.0;
    Vec3 center;
    for (const View &v : data.views) center += pose(v.camera).translation;
    center = center / double(data.views.size());
    double radius = 0;
    for (const View &v : data.views) radius = std::max(radius, length(pose(v.camera).translation - center));
    return radius > 0 ? 1.1 * radius : 1.0;
}

GradientPass compute_gradients(const Scene &scene, const Dataset &data, std::span<const int> views,
                               const TrainConfig &cfg, int iteration) {
    const auto t_forward = Clock::now();
    const TracedScene shared(scene);
    // Views captured under their own lights get a scene copy with those lights.
    std::vector<std::unique_ptr<TracedScene>> relit(views.size());
    for (std::size_t b = 0; b < views.size(); ++b) {
        const View &view = data.views.at(std::size_t(views[b]));
        if (view.lights.empty()) continue;
        Scene s = scene;
        s.lights = view.lights;
        relit[b] = std::make_unique<TracedScene>(std::move(s));
    }
    auto traced_for = [&](std::size_t b) -> const TracedScene & { return relit[b] ? *relit[b] : shared; };
    const int rounds = cfg.backward_samples;
    const bool record = cfg.backward_mode == BackwardMode::Stochastic;

    // Rows of all batch views form the work items.
    struct Row {
        std::size_t view_slot;
        int j;
    };
    std::vector<Row> rows;
    GradientPass pass;
    std::vector<std::vector<SampleRecord>> records(views.size());
    for (std::size_t b = 0; b < views.size(); ++b) {
        const View &view = data.views.at(std::size_t(views[b]));
        if (view.target.width != width(view.camera) || view.target.height != height(view.camera))
            fail("view {}: target size does not match its camera", views[b]);
        pass.renders.emplace_back(width(view.camera), height(view.camera));
        if (record) records[b].resize(pass.renders.back().pixels() * rounds);
        for (int j = 0; j < height(view.camera); ++j) rows.push_back({b, j});
    }

    parallel_for(rows.size(), cfg.threads, [&](std::size_t r) {
        const auto [b, j] = rows[r];
        const Camera &cam = data.views[std::size_t(views[b])].camera;
        const TracedScene &traced = traced_for(b);
        RenderOptions ro;
        ro.mode = cfg.forward_mode == ForwardMode::Sorted ? RenderMode::Sorted : RenderMode::Stochastic;
        ro.samples = cfg.forward_samples;
        ro.seed = view_seed(cfg, iteration, views[b]);
        ro.shade = cfg.shade;
        for (int i = 0; i < width(cam); ++i) {
            const Ray ray = generate_ray(cam, i, j);
            const std::uint64_t pid = pixel_id(cam, i, j);
            pass.renders[b].set(i, j, render_pixel(traced, ray, ro, pid));
            if (record) {
                const auto recs = sample_records(traced, ray, rounds, RngKey{ro.seed, pid, 0, Phase::PickFront});
                std::copy(recs.begin(), recs.end(), records[b].begin() + std::ptrdiff_t(pid * rounds));
            }
        }
    });
    pass.forward_ms = elapsed_ms(t_forward);

    const auto t_backward = Clock::now();
    std::vector<Image> upstream;
    double mse_total = 0;
    for (std::size_t b = 0; b < views.size(); ++b) {
        const Image &target = data.views[std::size_t(views[b])].target;
        L1Loss l = loss_l1(pass.renders[b], target);
        if (!std::isfinite(l.loss)) {
            for (std::size_t k = 0; k < pass.renders[b].data.size(); ++k)
                if (!std::isfinite(pass.renders[b].data[k]))
                    fail("non-finite render in view {} at pixel {}", views[b], k / 3);
            fail("non-finite loss in view {}", views[b]);
        }
        pass.loss += l.loss / double(views.size());
        mse_total += mse(pass.renders[b], target) / double(views.size());
        for (float &g : l.grad.data) g /= float(views.size());
        upstream.push_back(std::move(l.grad));
    }
    pass.psnr = mse_total == 0 ? kInfinity : 10 * std::log10(1 / mse_total);

    std::vector<SparseGrads> row_grads(rows.size());
    parallel_for(rows.size(), cfg.threads, [&](std::size_t r) {
        const auto [b, j] = rows[r];
        const Camera &cam = data.views[std::size_t(views[b])].camera;
        const std::uint64_t seed = view_seed(cfg, iteration, views[b]);
        const TracedScene &traced = traced_for(b);
        SparseGrads &acc = row_grads[r];
        std::vector<ShadeResult> front_shading(static_cast<std::size_t>(rounds));
        for (int i = 0; i < width(cam); ++i) {
            const Vec3 up = upstream[b].get(i, j);
            if (up == Vec3{}) continue;
            const Ray ray = generate_ray(cam, i, j);
            if (!ray.valid) continue;
            const std::uint64_t pid = pixel_id(cam, i, j);

            if (record) {
                std::span<const SampleRecord> recs(records[b].data() + pid * rounds, std::size_t(rounds));
                auto color = [&](std::uint32_t id, double depth, int m, bool behind) -> Vec3 {
                    const Gaussian &g = traced.gaussian(id);
                    if (const auto *e = std::get_if<Emissive>(&g.appearance)) return e->rgb;
                    RngStream rng(RngKey{seed, pid, std::uint64_t(m), behind ? Phase::ShadeBehind : Phase::ShadeFront});
                    ShadeResult s = shade_detailed(traced, id, ray.at(depth), -ray.dir, rng, cfg.shade);
                    if (!behind) front_shading[std::size_t(m)] = s;
                    return s.color;
                };
                const RayGrad rg = stochastic_grads(traced, ray, rounds, RngKey{seed, pid, 0, Phase::PickFront},
                                                    color, recs);
                for (const RayGradEntry &e : rg.entries) {
                    const Gaussian &g = traced.gaussian(e.id);
                    GaussianGrad &gg = acc.at(e.id);
                    backprop_to_params(g, ray, e.d_alpha, up, gg);
                    if (std::holds_alternative<Emissive>(g.appearance)) gg.appearance += up * e.d_color;
                }
                for (int m = 0; m < rounds; ++m) {
                    const SampleRecord &rec = recs[std::size_t(m)];
                    if (rec.front == kNoGaussian) continue;
                    const auto *refl = std::get_if<Reflective>(&traced.gaussian(rec.front).appearance);
                    if (!refl) continue;
                    const ShadeGradient sg = shade_gradient(*refl, front_shading[std::size_t(m)], up / rounds);
                    GaussianGrad &gg = acc.at(rec.front);
                    gg.appearance += sg.d_albedo;
                    gg.normal += sg.d_normal;
                }
            } else {
                const std::vector<Hit> hits = collect_hits(traced, ray);
                std::vector<Vec3> colors;
                std::vector<ShadeResult> shading(hits.size());
                for (std::size_t h = 0; h < hits.size(); ++h) {
                    const Gaussian &g = traced.gaussian(hits[h].id);
                    if (const auto *e = std::get_if<Emissive>(&g.appearance)) {
                        colors.push_back(e->rgb);
                    } else {
                        RngStream rng(RngKey{seed, pid, hits[h].id, Phase::ShadeFront});
                        shading[h] = shade_detailed(traced, hits[h].id, ray.at(hits[h].depth), -ray.dir, rng, cfg.shade);
                        colors.push_back(shading[h].color);
                    }
                }
                const RayGrad rg = analytic_grads_aligned(hits, colors, traced.background());
                for (const RayGradEntry &e : rg.entries) {
                    const Gaussian &g = traced.gaussian(e.id);
                    GaussianGrad &gg = acc.at(e.id);
                    backprop_to_params(g, ray, e.d_alpha, up, gg);
                    if (std::holds_alternative<Emissive>(g.appearance)) {
                        gg.appearance += up * e.d_color;
                    } else {
                        std::size_t h = 0;
                        while (hits[h].id != e.id) ++h;
                        const ShadeGradient sg =
                            shade_gradient(std::get<Reflective>(g.appearance), shading[h], up * e.d_color);
                        gg.appearance += sg.d_albedo;
                        gg.normal += sg.d_normal;
                    }
                }
            }
        }
    });

    pass.grads.assign(scene.gaussians.size(), GaussianGrad{});
    for (const SparseGrads &row : row_grads)
        for (std::size_t k = 0; k < row.ids.size(); ++k) pass.grads[row.ids[k]] += row.values[k];
    for (std::size_t id = 0; id < pass.grads.size(); ++id)
        if (!pass.grads[id].is_finite()) fail("non-finite gradient for gaussian {}", id);
    pass.backward_ms = elapsed_ms(t_backward);
    return pass;
}

void adam_step(Scene &scene, const GradBuffer &grads, const TrainConfig &cfg, double extent,
               OptState &state) {
    const std::size_t n = scene.gaussians.size();
    if (grads.size() != n) fail("adam_step: {} gradients for {} gaussians", grads.size(), n);
    state.first.resize(n);
    state.second.resize(n);
    ++state.step;
    const double bc1 = 1 - std::pow(0.9, double(state.step));
    const double bc2 = 1 - std::pow(0.999, double(state.step));
    const double decay = cfg.iterations > 1
                             ? std::pow(cfg.lr_decay, double(state.step - 1) / double(cfg.iterations - 1))
                             : 1.0;
    LearningRates lr = cfg.lr;
    lr.mean *= decay;
    lr.rotation *= decay;
    lr.log_scales *= decay;
    lr.density_logit *= decay;
    lr.appearance *= decay;

    for (std::size_t id = 0; id < n; ++id) {
        Gaussian &g = scene.gaussians[id];
        const GaussianGrad &d = grads[id];
        GaussianGrad &m = state.first[id];
        GaussianGrad &v = state.second[id];
        for (int k = 0; k < 3; ++k) {
            adam_update(g.mean[k], d.mean[k], m.mean[k], v.mean[k], lr.mean * extent, bc1, bc2);
            adam_update(g.log_scales[k], d.log_scales[k], m.log_scales[k], v.log_scales[k], lr.log_scales,
                        bc1, bc2);
        }
        for (int k = 0; k < 4; ++k)
            adam_update(g.rotation[k], d.rotation[k], m.rotation[k], v.rotation[k], lr.rotation, bc1, bc2);
        adam_update(g.density_logit, d.density_logit, m.density_logit, v.density_logit, lr.density_logit,
                    bc1, bc2);
        if (auto *e = std::get_if<Emissive>(&g.appearance)) {
            for (int k = 0; k < 3; ++k) {
                adam_update(e->rgb[k], d.appearance[k], m.appearance[k], v.appearance[k], lr.appearance, bc1,
                            bc2);
                e->rgb[k] = std::max(0.0, e->rgb[k]);
            }
        } else {
            auto &r = std::get<Reflective>(g.appearance);
            for (int k = 0; k < 3; ++k) {
                adam_update(r.albedo[k], d.appearance[k], m.appearance[k], v.appearance[k], lr.appearance,
                            bc1, bc2);
                r.albedo[k] = std::clamp(r.albedo[k], 0.0, 1.0);
                adam_update(r.normal[k], d.normal[k], m.normal[k], v.normal[k], lr.appearance, bc1, bc2);
            }
            renormalize(r.normal);
        }
        renormalize(g.rotation);
        if (!is_finite(g.mean) || !is_finite(g.log_scales) || !std::isfinite(g.density_logit))
            fail("gaussian {} left the valid parameter domain after the update", id);
    }
}

LossReport two_pass_iteration(Scene &scene, const Dataset &data, std::span<const int> views,
                              const TrainConfig &cfg, OptState &state, int iteration) {
    const auto t_total = Clock::now();
    GradientPass pass = compute_gradients(scene, data, views, cfg, iteration);
    const auto t_update = Clock::now();
    adam_step(scene, pass.grads, cfg, scene_extent(cfg, data), state);

    LossReport report;
    report.iteration = iteration;
    report.loss = pass.loss;
    report.psnr = pass.psnr;
    report.forward_ms = pass.forward_ms;
    report.backward_ms = pass.backward_ms;
    report.update_ms = elapsed_ms(t_update);
    report.total_ms = elapsed_ms(t_total);
    return report;
}

TrainResult train(Scene scene, const Dataset &data, const TrainConfig &cfg, const CheckpointFn &checkpoint) {
    validate(cfg, data.views.size());
    validate(scene);
    TrainResult result;
    OptState state;
    for (int it = 0; it < cfg.iterations; ++it) {
        const std::vector<int> views = batch_views(cfg, data.views.size(), it);
        result.reports.push_back(two_pass_iteration(scene, data, views, cfg, state, it));
        if (checkpoint && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0)
            checkpoint(it + 1, scene);
    }
    result.scene = std::move(scene);
    return result;
}

}  // namespace sgrt
