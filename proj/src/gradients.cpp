// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>
#include <sgrt/gradients.h>

#include <algorithm>

namespace sgrt {

RayGradEntry &RayGrad::entry(std::uint32_t id) {
    for (RayGradEntry &e : entries)
        if (e.id == id) return e;
    entries.push_back({id, 0, {}});
    return entries.back();
}

const RayGradEntry *RayGrad::find(std::uint32_t id) const {
    for (const RayGradEntry &e : entries)
        if (e.id == id) return &e;
    return nullptr;
}

void RayGrad::scale(double s) {
    for (RayGradEntry &e : entries) {
        e.d_color *= s;
        e.d_alpha *= s;
    }
}

RayGrad analytic_grads_aligned(std::span<const Hit> hits, std::span<const Vec3> colors,
                               const Vec3 &background) {
    if (colors.size() != hits.size()) fail("analytic_grads: {} colors for {} hits", colors.size(), hits.size());
    const std::vector<std::size_t> order = depth_order(hits);
    const std::size_t n = order.size();

    // Transmittance in front of each hit.
    std::vector<double> front(n);
    double t = 1;
    for (std::size_t r = 0; r < n; ++r) {
        front[r] = t;
        t *= 1 - hits[order[r]].alpha;
    }

    RayGrad grad;
    grad.entries.resize(n);
    // Blend of everything behind the current hit, background included.
    Vec3 behind = background;
    for (std::size_t r = n; r-- > 0;) {
        const Hit &h = hits[order[r]];
        const Vec3 &c = colors[order[r]];
        grad.entries[r] = {h.id, h.alpha * front[r], (c - behind) * front[r]};
        behind = c * h.alpha + behind * (1 - h.alpha);
    }
    return grad;
}

RayGrad analytic_grads(std::span<const Hit> hits, std::span<const Vec3> colors,
                       const Vec3 &background) {
    std::vector<Vec3> aligned;
    aligned.reserve(hits.size());
    for (const Hit &h : hits) {
        if (h.id >= colors.size()) fail("analytic_grads: no color for gaussian {}", h.id);
        aligned.push_back(colors[h.id]);
    }
    return analytic_grads_aligned(hits, aligned, background);
}

std::vector<SampleRecord> sample_records(const TracedScene &scene, const Ray &ray, int rounds,
                                         const RngKey &key) {
    if (rounds < 1) fail("sample_records: need at least one round");
    std::vector<SampleRecord> records(rounds);
    if (!ray.valid) return records;

    std::vector<RngStream> rngs(rounds);
    std::vector<double> min_depths(rounds, -kInfinity);
    std::vector<Pick> picks(rounds);
    const RngKey front_key = key.with_phase(Phase::PickFront);
    for (int m = 0; m < rounds; ++m) rngs[m] = RngStream(front_key.with_sample(m));
    pick_front_multi(scene, ray, rngs, min_depths, picks);

    std::vector<int> active;
    for (int m = 0; m < rounds; ++m) {
        if (picks[m].none()) continue;
        records[m].front = picks[m].id;
        records[m].front_alpha = picks[m].alpha;
        records[m].front_depth = picks[m].depth;
        active.push_back(m);
    }
    if (active.empty()) return records;

    const std::size_t n = active.size();
    std::vector<RngStream> behind_rngs(n);
    std::vector<double> behind_min(n);
    std::vector<Pick> behind(n);
    const RngKey behind_key = key.with_phase(Phase::PickBehind);
    for (std::size_t a = 0; a < n; ++a) {
        behind_rngs[a] = RngStream(behind_key.with_sample(active[a]));
        behind_min[a] = records[active[a]].front_depth;
    }
    pick_front_multi(scene, ray, behind_rngs, behind_min, behind);
    for (std::size_t a = 0; a < n; ++a) {
        records[active[a]].behind = behind[a].id;
        records[active[a]].behind_depth = behind[a].depth;
    }
    return records;
}

RayGrad stochastic_grads(const TracedScene &scene, const Ray &ray, int rounds, const RngKey &key,
                         const PickColorFn &color,
                         std::optional<std::span<const SampleRecord>> records) {
    if (rounds < 1) fail("stochastic_grads: need at least one round");
    std::vector<SampleRecord> sampled;
    std::span<const SampleRecord> recs;
    if (records) {
        if (records->size() != std::size_t(rounds))
            fail("stochastic_grads: {} records for {} rounds", records->size(), rounds);
        recs = *records;
    } else {
        sampled = sample_records(scene, ray, rounds, key);
        recs = sampled;
    }

    RayGrad grad;
    for (int m = 0; m < rounds; ++m) {
        const SampleRecord &r = recs[m];
        if (r.front == kNoGaussian) continue;
        const Vec3 c_plus = color(r.front, r.front_depth, m, false);
        const Vec3 c_minus =
            r.behind == kNoGaussian ? scene.background() : color(r.behind, r.behind_depth, m, true);
        RayGradEntry &e = grad.entry(r.front);
        e.d_color += 1;
        e.d_alpha += (c_plus - c_minus) / r.front_alpha;
    }
    grad.scale(1.0 / rounds);
    for (const RayGradEntry &e : grad.entries)
        if (!std::isfinite(e.d_color) || !is_finite(e.d_alpha))
            fail("stochastic_grads: non-finite gradient for gaussian {}", e.id);
    return grad;
}

RayGrad stochastic_grads(const TracedScene &scene, const Ray &ray, int rounds, const RngKey &key) {
    return stochastic_grads(scene, ray, rounds, key, [&](std::uint32_t id, double, int, bool) {
        return emissive_color(scene.gaussian(id));
    });
}

RayGrad stochastic_grads(std::span<const Hit> hits, std::span<const Vec3> colors, const Vec3 &background,
                         int rounds, const RngKey &key) {
    if (rounds < 1) fail("stochastic_grads: need at least one round");
    if (colors.size() != hits.size())
        fail("stochastic_grads: {} colors for {} hits", colors.size(), hits.size());
    auto color_of = [&](std::uint32_t id) {
        for (std::size_t i = 0; i < hits.size(); ++i)
            if (hits[i].id == id) return colors[i];
        return background;
    };
    const RngKey front_key = key.with_phase(Phase::PickFront);
    const RngKey behind_key = key.with_phase(Phase::PickBehind);
    RayGrad grad;
    for (int m = 0; m < rounds; ++m) {
        RngStream rng(front_key.with_sample(m));
        const Pick front = pick_front(hits, rng);
        if (front.none()) continue;
        RngStream behind_rng(behind_key.with_sample(m));
        const Pick behind = pick_front(hits, behind_rng, front.depth);
        RayGradEntry &e = grad.entry(front.id);
        e.d_color += 1;
        e.d_alpha += (color_of(front.id) - (behind.none() ? background : color_of(behind.id))) / front.alpha;
    }
    grad.scale(1.0 / rounds);
    return grad;
}

RayGrad ssplats_grads(std::span<const Hit> hits, std::span<const Vec3> colors,
                      const Vec3 &background, int rounds, const RngKey &key) {
    if (rounds < 1) fail("ssplats_grads: need at least one round");
    if (colors.size() != hits.size()) fail("ssplats_grads: {} colors for {} hits", colors.size(), hits.size());
    RayGrad grad;
    for (const Hit &h : hits) grad.entry(h.id);

    const RngKey front_key = key.with_phase(Phase::PickFront);
    for (int m = 0; m < rounds; ++m) {
        RngStream rng(front_key.with_sample(m));
        const Pick pick = pick_front(hits, rng);
        Vec3 c = background;
        if (!pick.none()) {
            for (std::size_t i = 0; i < hits.size(); ++i)
                if (hits[i].id == pick.id) c = colors[i];
            RayGradEntry &e = grad.entry(pick.id);
            e.d_color += 1;
            e.d_alpha += c / pick.alpha;
        }
        for (const Hit &h : hits) {
            if (!(h.depth < pick.depth)) continue;
            if (h.alpha > 0.99) ++grad.near_singular;
            grad.entry(h.id).d_alpha -= c / (1 - h.alpha);
        }
    }
    grad.scale(1.0 / rounds);
    return grad;
}

RayGrad ssplats_grads(const TracedScene &scene, const Ray &ray, int rounds, const RngKey &key) {
    const std::vector<Hit> hits = collect_hits(scene, ray);
    std::vector<Vec3> colors;
    colors.reserve(hits.size());
    for (const Hit &h : hits) colors.push_back(emissive_color(scene.gaussian(h.id)));
    return ssplats_grads(hits, colors, scene.background(), rounds, key);
}

double ComponentStats::ratio() const {
    if (var_ours == 0) return var_ssplats == 0 ? 1.0 : kInfinity;
    return var_ssplats / var_ours;
}

std::vector<ComponentStats> compare_estimators(std::span<const Hit> hits, std::span<const Vec3> colors,
                                               const Vec3 &background, int rounds, std::size_t trials,
                                               std::uint64_t seed, bool with_ssplats) {
    if (trials < 2) fail("compare_estimators: need at least two trials");
    const RayGrad reference = analytic_grads_aligned(hits, colors, background);
    const std::size_t n = reference.entries.size();
    static const char *names[4] = {"d_color", "d_alpha.r", "d_alpha.g", "d_alpha.b"};
    auto component = [](const RayGradEntry *e, int k) {
        if (!e) return 0.0;
        return k == 0 ? e->d_color : e->d_alpha[k - 1];
    };

    // Welford accumulators per (entry, component) for each estimator.
    struct Running {
        double mean = 0, m2 = 0;
        void add(double x, std::size_t count) {
            const double d = x - mean;
            mean += d / double(count);
            m2 += d * (x - mean);
        }
    };
    std::vector<Running> ours(4 * n), ss(4 * n);
    for (std::size_t t = 0; t < trials; ++t) {
        const RngKey key{seed, t, 0, Phase::PickFront};
        const RayGrad a = stochastic_grads(hits, colors, background, rounds, key);
        RayGrad b;
        if (with_ssplats) b = ssplats_grads(hits, colors, background, rounds, key);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t id = reference.entries[i].id;
            for (int k = 0; k < 4; ++k) {
                ours[4 * i + k].add(component(a.find(id), k), t + 1);
                if (with_ssplats) ss[4 * i + k].add(component(b.find(id), k), t + 1);
            }
        }
    }

    std::vector<ComponentStats> out;
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 4; ++k) {
            ComponentStats c;
            c.id = reference.entries[i].id;
            c.param = names[k];
            c.analytic = component(&reference.entries[i], k);
            c.trials = trials;
            c.mean_ours = ours[4 * i + k].mean;
            c.var_ours = ours[4 * i + k].m2 / double(trials - 1);
            c.mean_ssplats = ss[4 * i + k].mean;
            c.var_ssplats = ss[4 * i + k].m2 / double(trials - 1);
            out.push_back(c);
        }
    return out;
}

namespace {

// dR/dq for each quaternion component, contracted with G = dE/dR.
std::array<double, 4> rotation_grad(const Quat &u, const Mat3 &g) {
    const double w = u.w, x = u.x, y = u.y, z = u.z;
    std::array<double, 4> d{};
    d[0] = g(0, 1) * (-2 * z) + g(0, 2) * (2 * y) + g(1, 0) * (2 * z) + g(1, 2) * (-2 * x) +
           g(2, 0) * (-2 * y) + g(2, 1) * (2 * x);
    d[1] = g(0, 1) * (2 * y) + g(0, 2) * (2 * z) + g(1, 0) * (2 * y) + g(1, 1) * (-4 * x) +
           g(1, 2) * (-2 * w) + g(2, 0) * (2 * z) + g(2, 1) * (2 * w) + g(2, 2) * (-4 * x);
    d[2] = g(0, 0) * (-4 * y) + g(0, 1) * (2 * x) + g(0, 2) * (2 * w) + g(1, 0) * (2 * x) +
           g(1, 2) * (2 * z) + g(2, 0) * (-2 * w) + g(2, 1) * (2 * z) + g(2, 2) * (-4 * y);
    d[3] = g(0, 0) * (-4 * z) + g(0, 1) * (-2 * w) + g(0, 2) * (2 * x) + g(1, 0) * (2 * w) +
           g(1, 1) * (-4 * z) + g(1, 2) * (2 * y) + g(2, 0) * (2 * x) + g(2, 1) * (2 * y);
    return d;
}

}  // namespace

OpacityJacobian opacity_jacobian(const Gaussian &g, const Ray &ray) {
    const double qn = norm(g.rotation);
    const Quat u = normalize(g.rotation);
    const Mat3 rot = to_matrix(u);
    const Vec3 inv_var{std::exp(-2 * g.log_scales.x), std::exp(-2 * g.log_scales.y),
                       std::exp(-2 * g.log_scales.z)};
    const GaussianKernel kernel = make_kernel(g);
    const MaxResponse peak = max_response(ray, kernel);

    const Vec3 q = peak.x - g.mean;
    const Vec3 local = transpose(rot) * q;
    const double e = inv_var.x * local.x * local.x + inv_var.y * local.y * local.y +
                     inv_var.z * local.z * local.z;
    const double sigma = kernel.density;
    const double raw = sigma * std::exp(-e);

    OpacityJacobian j;
    j.alpha = std::clamp(raw, 0.0, kAlphaMax);
    if (raw > kAlphaMax) {
        j.clamped = true;
        return j;
    }

    // dalpha/dE = -alpha
    const double a = -raw;
    j.d_mean = (kernel.precision * q) * (-2 * a);
    for (int k = 0; k < 3; ++k) j.d_log_scales[k] = a * (-2 * inv_var[k] * local[k] * local[k]);

    Mat3 de_drot;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) de_drot(i, k) = 2 * inv_var[k] * local[k] * q[i];
    const std::array<double, 4> du = rotation_grad(u, de_drot);
    // Project through the normalization q / |q|.
    const double radial = du[0] * u.w + du[1] * u.x + du[2] * u.y + du[3] * u.z;
    for (int k = 0; k < 4; ++k) j.d_rotation[k] = a * (du[k] - radial * u[k]) / qn;

    j.d_density_logit = raw * (1 - sigma);
    return j;
}

GaussianGrad &GaussianGrad::operator+=(const GaussianGrad &o) {
    mean += o.mean;
    for (int k = 0; k < 4; ++k) rotation[k] += o.rotation[k];
    log_scales += o.log_scales;
    density_logit += o.density_logit;
    appearance += o.appearance;
    normal += o.normal;
    return *this;
}

GaussianGrad GaussianGrad::operator*(double s) const {
    GaussianGrad r = *this;
    r.mean *= s;
    for (double &v : r.rotation) v *= s;
    r.log_scales *= s;
    r.density_logit *= s;
    r.appearance *= s;
    r.normal *= s;
    return r;
}

bool GaussianGrad::is_finite() const {
    for (int k = 0; k < kParamsPerGaussian; ++k)
        if (!std::isfinite(flat_param(*this, k))) return false;
    return true;
}

double flat_param(const GaussianGrad &g, int k) {
    if (k < 3) return g.mean[k];
    if (k < 7) return g.rotation[k - 3];
    if (k < 10) return g.log_scales[k - 7];
    if (k == 10) return g.density_logit;
    if (k < 14) return g.appearance[k - 11];
    return g.normal[k - 14];
}

const char *param_name(int k) {
    static const char *names[kParamsPerGaussian] = {
        "mean.x",       "mean.y",       "mean.z",       "rotation.w",   "rotation.x",   "rotation.y",
        "rotation.z",   "log_scales.x", "log_scales.y", "log_scales.z", "density_logit", "appearance.r",
        "appearance.g", "appearance.b", "normal.x",     "normal.y",     "normal.z"};
    return names[k];
}

void backprop_to_params(const Gaussian &g, const Ray &ray, const Vec3 &d_alpha, const Vec3 &upstream,
                        GaussianGrad &out) {
    const double dl_dalpha = dot(upstream, d_alpha);
    if (!std::isfinite(dl_dalpha)) fail("backprop: non-finite dL/dalpha");
    if (dl_dalpha == 0) return;
    const OpacityJacobian j = opacity_jacobian(g, ray);
    if (j.clamped) return;
    out.mean += j.d_mean * dl_dalpha;
    for (int k = 0; k < 4; ++k) out.rotation[k] += j.d_rotation[k] * dl_dalpha;
    out.log_scales += j.d_log_scales * dl_dalpha;
    out.density_logit += j.d_density_logit * dl_dalpha;
}

namespace {

double &gaussian_param(Gaussian &g, int k) {
    if (k < 3) return g.mean[k];
    if (k < 7) return g.rotation[k - 3];
    if (k < 10) return g.log_scales[k - 7];
    if (k == 10) return g.density_logit;
    return std::get<Emissive>(g.appearance).rgb[k - 11];
}

double blended_loss(const Scene &scene, const Ray &ray, const Vec3 &upstream) {
    const TracedScene traced(scene);
    const std::vector<Hit> hits = collect_hits(traced, ray);
    const std::vector<Vec3> colors = emissive_colors(scene);
    return dot(upstream, sorted_blend(hits, colors, scene.background).color);
}

}  // namespace

GradcheckReport fd_gradcheck(const Scene &scene, const Ray &ray, double step, const Vec3 &upstream) {
    if (!(step >= 1e-7 && step <= 1e-3)) fail("fd_gradcheck: step {} outside [1e-7, 1e-3]", step);
    const TracedScene traced(scene);
    const std::vector<Hit> hits = collect_hits(traced, ray);
    const std::vector<Vec3> colors = emissive_colors(scene);
    const RayGrad grad = analytic_grads(hits, colors, scene.background);

    GradcheckReport report;
    for (const RayGradEntry &e : grad.entries) {
        GaussianGrad analytic;
        backprop_to_params(scene.gaussians[e.id], ray, e.d_alpha, upstream, analytic);
        analytic.appearance = upstream * e.d_color;

        for (int k = 0; k < 14; ++k) {
            Scene plus = scene, minus = scene;
            gaussian_param(plus.gaussians[e.id], k) += step;
            gaussian_param(minus.gaussians[e.id], k) -= step;
            const double numeric =
                (blended_loss(plus, ray, upstream) - blended_loss(minus, ray, upstream)) / (2 * step);
            const double a = flat_param(analytic, k);
            const double rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradcheckFloor});
            report.rows.push_back({e.id, param_name(k), a, numeric, rel});
            report.max_rel_error = std::max(report.max_rel_error, rel);
        }
    }
    return report;
}

GradcheckReport fd_gradcheck_scene(const Scene &scene, double step, const Vec3 &upstream) {
    GradcheckReport report;
    for (const Camera &cam : scene.cameras) {
        for (const Gaussian &g : scene.gaussians) {
            Ray ray;
            ray.origin = pose(cam).translation;
            const Vec3 to_mean = g.mean - ray.origin;
            if (length(to_mean) == 0) continue;
            ray.dir = normalize(to_mean);
            GradcheckReport r = fd_gradcheck(scene, ray, step, upstream);
            report.max_rel_error = std::max(report.max_rel_error, r.max_rel_error);
            report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
        }
    }
    return report;
}

}  // namespace sgrt
