// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/render.h>
#include <sgrt/toy.h>

namespace sgrt {

namespace {

class Sampler {
  public:
    explicit Sampler(std::uint64_t seed) : rng_(RngKey{seed, 0, 0, Phase::Test}) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }

    double normal() {
        const double u1 = 1 - rng_.uniform(), u2 = rng_.uniform();
        return std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2);
    }

    Vec3 uniform3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

    Vec3 unit_vector() {
        const double z = uniform(-1, 1), phi = uniform(0, 2 * kPi);
        const double r = std::sqrt(std::max(0.0, 1 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    Quat rotation() { return normalize(Quat{normal(), normal(), normal(), normal()}); }

    Vec3 log_scales(double lo, double hi) {
        return {std::log(uniform(lo, hi)), std::log(uniform(lo, hi)), std::log(uniform(lo, hi))};
    }

  private:
    RngStream rng_;
};

}  // namespace

std::vector<Camera> ring_cameras(int views, int resolution, double distance, double fov_y) {
    std::vector<Camera> cams;
    for (int v = 0; v < views; ++v) {
        const double azimuth = 2 * kPi * v / views;
        const double elevation = (v % 2 == 0 ? 0.35 : -0.35);
        const Vec3 eye{distance * std::cos(elevation) * std::cos(azimuth), distance * std::sin(elevation),
                       distance * std::cos(elevation) * std::sin(azimuth)};
        cams.push_back(PinholeCamera{look_at(eye, {0, 0, 0}, {0, 1, 0}), fov_y, resolution, resolution});
    }
    return cams;
}

Scene toy_emissive_scene(std::uint64_t seed, int count, int views, int resolution) {
    Sampler s(seed);
    Scene scene;
    for (int i = 0; i < count; ++i) {
        Gaussian g;
        g.mean = s.uniform3(-0.8, 0.8);
        g.rotation = s.rotation();
        g.log_scales = s.log_scales(0.15, 0.35);
        g.density_logit = logit(s.uniform(0.7, 0.95));
        g.appearance = Emissive{s.uniform3(0.1, 0.95)};
        scene.gaussians.push_back(g);
    }
    scene.cameras = ring_cameras(views, resolution);
    return scene;
}

Scene occluder_scene(std::uint64_t seed) {
    Sampler s(seed);
    Scene scene;
    scene.background = {0.2, 0.3, 0.4};
    Gaussian occluder;
    occluder.mean = {0, 0, 2};
    occluder.log_scales = {std::log(0.6), std::log(0.6), std::log(0.2)};
    occluder.density_logit = logit(0.97);
    occluder.appearance = Emissive{s.uniform3(0.2, 0.9)};
    scene.gaussians.push_back(occluder);
    for (int i = 0; i < 5; ++i) {
        Gaussian g;
        g.mean = {s.uniform(-0.1, 0.1), s.uniform(-0.1, 0.1), 3.0 + i};
        g.rotation = s.rotation();
        g.log_scales = s.log_scales(0.3, 0.5);
        g.density_logit = logit(s.uniform(0.3, 0.8));
        g.appearance = Emissive{s.uniform3(0.1, 0.95)};
        scene.gaussians.push_back(g);
    }
    scene.cameras.push_back(PinholeCamera{look_at({0, 0, 0}, {0, 0, 1}, {0, 1, 0}), 0.3, 33, 33});
    return scene;
}

Scene toy_relight_scene(std::uint64_t seed, int count, int views, int resolution) {
    Sampler s(seed);
    Scene scene;
    for (int i = 0; i < count; ++i) {
        Gaussian g;
        g.mean = {s.uniform(-1, 1), s.uniform(-0.5, 0.5), s.uniform(-1, 1)};
        g.rotation = s.rotation();
        g.log_scales = s.log_scales(0.15, 0.3);
        g.density_logit = logit(s.uniform(0.7, 0.95));
        Vec3 n = s.unit_vector();
        n.y = std::abs(n.y) + 0.5;
        g.appearance = Reflective{s.uniform3(0.1, 0.9), normalize(n), ReflectanceModel::Lambert};
        scene.gaussians.push_back(g);
    }
    scene.lights = {PointLight{{3, 3, 0}, {40, 40, 40}}, PointLight{{-2, 3, 2.5}, {40, 40, 40}},
                    PointLight{{-0.5, 3, -3}, {40, 40, 40}}};
    scene.cameras = ring_cameras(views, resolution);
    return scene;
}

PointLight held_out_light() { return {{1.5, 3.5, 2.5}, {40, 40, 40}}; }

Scene random_init(const Scene &reference, std::uint64_t seed, double jitter) {
    Sampler s(seed);
    Scene scene = reference;
    for (Gaussian &g : scene.gaussians) {
        g.mean += Vec3{s.normal(), s.normal(), s.normal()} * jitter;
        g.rotation = s.rotation();
        g.log_scales = s.log_scales(0.15, 0.3);
        g.density_logit = 0;
        if (std::holds_alternative<Emissive>(g.appearance)) {
            g.appearance = Emissive{s.uniform3(0.2, 0.8)};
        } else {
            auto &r = std::get<Reflective>(g.appearance);
            r.albedo = s.uniform3(0.2, 0.8);
            r.normal = s.unit_vector();
        }
    }
    return scene;
}

Dataset render_dataset(const Scene &scene, bool stochastic, int samples, std::uint64_t seed, int threads) {
    const TracedScene traced(scene);
    RenderOptions opts;
    opts.mode = stochastic ? RenderMode::Stochastic : RenderMode::Sorted;
    opts.samples = samples;
    opts.threads = threads;
    Dataset data;
    for (std::size_t v = 0; v < scene.cameras.size(); ++v) {
        opts.seed = hash_combine(seed, v);
        data.views.push_back({scene.cameras[v], render(traced, scene.cameras[v], opts), {}});
    }
    return data;
}

Dataset render_dataset_per_light(const Scene &scene, int samples, std::uint64_t seed, int threads) {
    Dataset data;
    for (std::size_t l = 0; l < scene.lights.size(); ++l) {
        Scene lit = scene;
        lit.lights = {scene.lights[l]};
        Dataset part = render_dataset(lit, true, samples, hash_combine(seed, l), threads);
        for (View &v : part.views) {
            v.lights = lit.lights;
            data.views.push_back(std::move(v));
        }
    }
    return data;
}

}  // namespace sgrt
