// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: render, gradcheck, bench, train, relight and
// helpers that write the bundled toy scenes and datasets.

#include <sgrt/error.h>
#include <sgrt/io.h>
#include <sgrt/render.h>
#include <sgrt/toy.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace sgrt;

namespace {

ImageFormat format_for(const fs::path &out) {
    const std::string ext = out.extension().string();
    if (ext == ".ppm") return ImageFormat::Ppm;
    if (ext == ".csv") return ImageFormat::Csv;
    fail("{}: output extension must be .ppm or .csv", out.string());
}

const Camera &camera_at(const Scene &scene, int index) {
    if (index < 0 || std::size_t(index) >= scene.cameras.size())
        fail("camera index {} out of range; the scene has {} cameras", index, scene.cameras.size());
    return scene.cameras[std::size_t(index)];
}

RenderMode parse_mode(const std::string &m) {
    return m == "stochastic" ? RenderMode::Stochastic : RenderMode::Sorted;
}

struct RenderArgs {
    std::string scene, out, mode = "sorted";
    int camera = 0, samples = 30, threads = 1, env_samples = 16;
    std::uint64_t seed = 0;
    bool exact_transmittance = false;
};

int cmd_render(const RenderArgs &a) {
    const Scene scene = read_scene(a.scene);
    const Camera &cam = camera_at(scene, a.camera);
    RenderOptions opts;
    opts.mode = parse_mode(a.mode);
    opts.samples = a.samples;
    opts.seed = a.seed;
    opts.threads = a.threads;
    opts.shade.env_samples = a.env_samples;
    opts.shade.exact_transmittance = a.exact_transmittance;
    const Image img = render(TracedScene(scene), cam, opts);
    write_image(img, a.out, format_for(a.out));
    return 0;
}

struct GradcheckArgs {
    std::string scene, report;
    double tolerance = 1e-4, step = 1e-5;
};

int cmd_gradcheck(const GradcheckArgs &a) {
    const Scene scene = read_scene(a.scene);
    const GradcheckReport r = fd_gradcheck_scene(scene, a.step);
    if (!a.report.empty()) {
        std::string csv = "gaussian,param,analytic,numeric,rel_error\n";
        for (const GradcheckRow &row : r.rows)
            csv += fmt::format("{},{},{},{},{}\n", row.gaussian, row.param, row.analytic, row.numeric, row.rel_error);
        write_text(csv, a.report);
    }
    fmt::print("gradcheck: {} comparisons, max relative error {:.3e} (tolerance {:.1e})\n", r.rows.size(),
               r.max_rel_error, a.tolerance);
    if (r.rows.empty()) fail("gradcheck: no camera ray hit any Gaussian");
    return r.passed(a.tolerance) ? 0 : 1;
}

struct BenchArgs {
    std::string scene, estimator = "ours", out;
    int camera = 0, rounds = 8, pixel_i = -1, pixel_j = -1;
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs &a) {
    const Scene scene = read_scene(a.scene);
    const Camera &cam = camera_at(scene, a.camera);
    const int i = a.pixel_i < 0 ? width(cam) / 2 : a.pixel_i;
    const int j = a.pixel_j < 0 ? height(cam) / 2 : a.pixel_j;
    if (i >= width(cam) || j >= height(cam)) fail("pixel ({}, {}) is outside the image", i, j);
    const TracedScene traced(scene);
    const Ray ray = generate_ray(cam, i, j);
    const std::vector<Hit> hits = collect_hits(traced, ray);
    if (hits.empty()) fail("the ray through pixel ({}, {}) hits no Gaussian", i, j);
    std::vector<Vec3> colors;
    for (const Hit &h : hits) colors.push_back(emissive_color(traced.gaussian(h.id)));
    const auto stats = compare_estimators(hits, colors, scene.background, a.rounds, a.trials, a.seed);

    const bool ours = a.estimator == "ours";
    const std::string scene_id = fs::path(a.scene).stem().string();
    std::string csv = "scene_id,param,analytic,empirical_mean,stderr,ratio\n";
    for (const ComponentStats &c : stats)
        csv += fmt::format("{},g{}.{},{},{},{},{}\n", scene_id, c.id, c.param, c.analytic,
                           ours ? c.mean_ours : c.mean_ssplats, ours ? c.stderr_ours() : c.stderr_ssplats(),
                           c.ratio());

    // Summary: variance ratio of the front-most hit's dC/dalpha, summed over channels.
    const std::uint32_t front = hits[depth_order(hits).front()].id;
    double var_ours = 0, var_ss = 0;
    for (const ComponentStats &c : stats)
        if (c.id == front && c.param != "d_color") {
            var_ours += c.var_ours;
            var_ss += c.var_ssplats;
        }
    const double ratio = var_ss / var_ours;
    csv += fmt::format("{},summary.g{}.d_alpha,,,,{}\n", scene_id, front, ratio);
    if (!a.out.empty()) write_text(csv, a.out);
    else fmt::print("{}", csv);
    fmt::print(stderr, "bench: front gaussian {} variance ratio ssplats/ours = {:.3f}\n", front, ratio);
    return 0;
}

struct TrainArgs {
    std::string scene, dataset, config, out;
    int random = 0, threads = 0;
    std::int64_t seed = -1;
};

int cmd_train(const TrainArgs &a) {
    const Dataset data = read_dataset(a.dataset);
    TrainConfig cfg = a.config.empty() ? TrainConfig{} : read_train_config(a.config);
    if (a.threads > 0) cfg.threads = a.threads;
    if (a.seed >= 0) cfg.seed = std::uint64_t(a.seed);
    validate(cfg, data.views.size());

    Scene init;
    if (!a.scene.empty()) {
        init = read_scene(a.scene);
    } else {
        if (a.random < 1) fail("train: give --scene or --random N");
        init = toy_emissive_scene(cfg.seed, a.random, 0);
        for (const View &v : data.views) init.cameras.push_back(v.camera);
    }

    const fs::path out(a.out);
    fs::create_directories(out / "checkpoints");
    const TrainResult result = train(init, data, cfg, [&](int it, const Scene &s) {
        write_scene(s, out / "checkpoints" / fmt::format("iter_{:06d}.json", it));
    });
    write_scene(result.scene, out / "scene.json");
    write_loss_reports(result.reports, out / "losses.csv");
    if (!result.reports.empty()) {
        const LossReport &last = result.reports.back();
        fmt::print("train: {} iterations, final loss {:.6f}, psnr {:.2f} dB\n", result.reports.size(), last.loss,
                   last.psnr);
    }
    return 0;
}

struct RelightArgs {
    std::string scene, lights, envmap, out, mode = "stochastic";
    int camera = 0, samples = 15, threads = 1, env_samples = 16;
    std::uint64_t seed = 0;
    bool exact_transmittance = false;
};

int cmd_relight(const RelightArgs &a) {
    Scene scene = read_scene(a.scene);
    if (!a.lights.empty() && !a.envmap.empty()) fail("relight: give --lights or --envmap, not both");
    if (!a.lights.empty()) {
        scene.lights = read_lights(a.lights);
    } else if (!a.envmap.empty()) {
        EnvmapLight env = read_envmap(a.envmap);
        env.source = a.envmap;
        scene.lights = {env};
    }
    const Camera &cam = camera_at(scene, a.camera);
    RenderOptions opts;
    opts.mode = parse_mode(a.mode);
    opts.samples = a.samples;
    opts.seed = a.seed;
    opts.threads = a.threads;
    opts.shade.env_samples = a.env_samples;
    opts.shade.exact_transmittance = a.exact_transmittance;
    write_image(render(TracedScene(scene), cam, opts), a.out, format_for(a.out));
    return 0;
}

struct ToyArgs {
    std::string kind = "emissive", out;
    std::uint64_t seed = 1;
    int count = 8, views = 8, resolution = 64;
};

int cmd_make_toy(const ToyArgs &a) {
    Scene scene;
    if (a.kind == "emissive")
        scene = toy_emissive_scene(a.seed, a.count, a.views, a.resolution);
    else if (a.kind == "occluder")
        scene = occluder_scene(a.seed);
    else
        scene = toy_relight_scene(a.seed, a.count, a.views, a.resolution);
    write_scene(scene, a.out);
    return 0;
}

struct DatasetArgs {
    std::string scene, out, mode = "sorted";
    int samples = 1024, threads = 1;
    std::uint64_t seed = 0;
    bool per_light = false;
};

int cmd_make_dataset(const DatasetArgs &a) {
    const Scene scene = read_scene(a.scene);
    const Dataset data = a.per_light ? render_dataset_per_light(scene, a.samples, a.seed, a.threads)
                                     : render_dataset(scene, a.mode == "stochastic", a.samples, a.seed, a.threads);
    write_dataset(data, a.out);
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"sgrt: sorting-free stochastic ray tracing of 3D Gaussians"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("--quiet", quiet, "Suppress warnings");
    const std::vector<std::string> modes{"sorted", "stochastic"};

    RenderArgs ra;
    auto *render_cmd = app.add_subcommand("render", "Render one camera of a scene");
    render_cmd->add_option("--scene", ra.scene, "Scene file")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--camera", ra.camera, "Camera index");
    render_cmd->add_option("--mode", ra.mode, "sorted or stochastic")->check(CLI::IsMember(modes));
    render_cmd->add_option("--samples", ra.samples, "Forward samples per pixel (stochastic)")->check(CLI::PositiveNumber);
    render_cmd->add_option("--seed", ra.seed);
    render_cmd->add_option("--threads", ra.threads)->check(CLI::PositiveNumber);
    render_cmd->add_option("--env-samples", ra.env_samples)->check(CLI::PositiveNumber);
    render_cmd->add_flag("--exact-transmittance", ra.exact_transmittance, "Noise-free shadow transmittance");
    render_cmd->add_option("--out", ra.out, "Output .ppm or .csv")->required();

    GradcheckArgs ga;
    auto *grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    grad_cmd->add_option("--scene", ga.scene)->required()->check(CLI::ExistingFile);
    grad_cmd->add_option("--tolerance", ga.tolerance);
    grad_cmd->add_option("--step", ga.step);
    grad_cmd->add_option("--report", ga.report, "Optional per-parameter CSV");
    int unused_threads = 1;
    std::uint64_t unused_seed = 0;
    grad_cmd->add_option("--threads", unused_threads)->check(CLI::PositiveNumber);
    grad_cmd->add_option("--seed", unused_seed);

    BenchArgs ba;
    auto *bench_cmd = app.add_subcommand("bench", "Estimator variance on one pixel ray");
    bench_cmd->add_option("--scene", ba.scene)->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--estimator", ba.estimator)->check(CLI::IsMember({"ours", "ssplats"}));
    bench_cmd->add_option("--rounds", ba.rounds, "Backward samples per trial")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--trials", ba.trials)->check(CLI::Range(2, 1 << 30));
    bench_cmd->add_option("--camera", ba.camera);
    bench_cmd->add_option("--pixel-i", ba.pixel_i);
    bench_cmd->add_option("--pixel-j", ba.pixel_j);
    bench_cmd->add_option("--seed", ba.seed);
    bench_cmd->add_option("--threads", unused_threads)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--out", ba.out, "CSV output (stdout if omitted)");

    TrainArgs ta;
    auto *train_cmd = app.add_subcommand("train", "Fit a scene to a dataset directory");
    auto *scene_opt = train_cmd->add_option("--scene", ta.scene, "Initial scene")->check(CLI::ExistingFile);
    train_cmd->add_option("--random", ta.random, "Start from N random emissive Gaussians")->excludes(scene_opt);
    train_cmd->add_option("--dataset", ta.dataset)->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--config", ta.config)->check(CLI::ExistingFile);
    train_cmd->add_option("--threads", ta.threads)->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", ta.seed)->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--out", ta.out, "Output directory")->required();

    RelightArgs la;
    auto *relight_cmd = app.add_subcommand("relight", "Render a relightable scene under new lights");
    relight_cmd->add_option("--scene", la.scene)->required()->check(CLI::ExistingFile);
    relight_cmd->add_option("--lights", la.lights, "JSON light list")->check(CLI::ExistingFile);
    relight_cmd->add_option("--envmap", la.envmap, "ENVF environment map")->check(CLI::ExistingFile);
    relight_cmd->add_option("--camera", la.camera);
    relight_cmd->add_option("--mode", la.mode)->check(CLI::IsMember(modes));
    relight_cmd->add_option("--samples", la.samples)->check(CLI::PositiveNumber);
    relight_cmd->add_option("--seed", la.seed);
    relight_cmd->add_option("--threads", la.threads)->check(CLI::PositiveNumber);
    relight_cmd->add_option("--env-samples", la.env_samples)->check(CLI::PositiveNumber);
    relight_cmd->add_flag("--exact-transmittance", la.exact_transmittance);
    relight_cmd->add_option("--out", la.out)->required();

    ToyArgs ya;
    auto *toy_cmd = app.add_subcommand("make-toy", "Write a synthetic scene");
    toy_cmd->add_option("--kind", ya.kind)->check(CLI::IsMember({"emissive", "occluder", "relight"}));
    toy_cmd->add_option("--seed", ya.seed);
    toy_cmd->add_option("--count", ya.count)->check(CLI::PositiveNumber);
    toy_cmd->add_option("--views", ya.views)->check(CLI::NonNegativeNumber);
    toy_cmd->add_option("--resolution", ya.resolution)->check(CLI::PositiveNumber);
    toy_cmd->add_option("--out", ya.out)->required();

    DatasetArgs da;
    auto *data_cmd = app.add_subcommand("make-dataset", "Render a scene's cameras into a dataset directory");
    data_cmd->add_option("--scene", da.scene)->required()->check(CLI::ExistingFile);
    data_cmd->add_option("--mode", da.mode)->check(CLI::IsMember(modes));
    data_cmd->add_option("--samples", da.samples)->check(CLI::PositiveNumber);
    data_cmd->add_option("--seed", da.seed);
    data_cmd->add_option("--threads", da.threads)->check(CLI::PositiveNumber);
    data_cmd->add_flag("--per-light", da.per_light, "One stochastic target per camera and light");
    data_cmd->add_option("--out", da.out)->required();

    CLI11_PARSE(app, argc, argv);
    if (quiet) set_warnings_enabled(false);

    try {
        if (*render_cmd) return cmd_render(ra);
        if (*grad_cmd) return cmd_gradcheck(ga);
        if (*bench_cmd) return cmd_bench(ba);
        if (*train_cmd) return cmd_train(ta);
        if (*relight_cmd) return cmd_relight(la);
        if (*toy_cmd) return cmd_make_toy(ya);
        if (*data_cmd) return cmd_make_dataset(da);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
