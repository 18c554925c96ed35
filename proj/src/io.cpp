// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>
#include <sgrt/io.h>

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace sgrt {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Field accessor that carries its document path for error messages.
class Node {
  public:
    Node(const json &j, std::string path) : j_(j), path_(std::move(path)) {}

    const std::string &path() const { return path_; }
    const json &raw() const { return j_; }

    void expect_object(std::initializer_list<const char *> allowed) const {
        if (!j_.is_object()) fail("{}: expected an object", path_);
        for (const auto &[key, _] : j_.items()) {
            bool ok = false;
            for (const char *a : allowed) ok = ok || key == a;
            if (!ok) fail("{}: unknown field \"{}\"", path_, key);
        }
    }

    bool has(const char *key) const { return j_.contains(key); }

    Node operator[](const char *key) const {
        if (!j_.contains(key)) fail("{}: missing field \"{}\"", path_, key);
        return {j_.at(key), join(key)};
    }

    Node operator[](std::size_t i) const { return {j_.at(i), fmt::format("{}[{}]", path_, i)}; }

    std::size_t size() const {
        if (!j_.is_array()) fail("{}: expected an array", path_);
        return j_.size();
    }

    double number() const {
        if (!j_.is_number()) fail("{}: expected a finite number", path_);
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("{}: expected a finite number", path_);
        return v;
    }

    std::int64_t integer() const {
        if (!j_.is_number_integer()) fail("{}: expected an integer", path_);
        return j_.get<std::int64_t>();
    }

    std::string string() const {
        if (!j_.is_string()) fail("{}: expected a string", path_);
        return j_.get<std::string>();
    }

    bool boolean() const {
        if (!j_.is_boolean()) fail("{}: expected true or false", path_);
        return j_.get<bool>();
    }

    std::vector<double> numbers(std::size_t n) const {
        if (size() != n) fail("{}: expected {} numbers, got {}", path_, n, j_.size());
        std::vector<double> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back((*this)[i].number());
        return out;
    }

    Vec3 vec3() const {
        const auto v = numbers(3);
        return {v[0], v[1], v[2]};
    }

  private:
    std::string join(const char *key) const { return path_.empty() ? key : path_ + "." + key; }

    const json &j_;
    std::string path_;
};

json to_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

json parse_json(const std::string &text, const std::string &what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        fail("{}: malformed JSON: {}", what, e.what());
    }
}

// Checks an invariant of an already parsed object and prefixes the path.
template <typename T>
void check(const T &value, const std::string &path) {
    try {
        validate(value);
    } catch (const Error &e) {
        fail("{}: {}", path, e.what());
    }
}

Gaussian parse_gaussian(const Node &n) {
    n.expect_object({"mean", "quat", "log_scales", "density_logit", "appearance"});
    Gaussian g;
    g.mean = n["mean"].vec3();
    const auto q = n["quat"].numbers(4);
    g.rotation = {q[0], q[1], q[2], q[3]};
    g.log_scales = n["log_scales"].vec3();
    g.density_logit = n["density_logit"].number();

    const double qn = norm(g.rotation);
    if (qn == 0) fail("{}.quat: zero quaternion", n.path());
    if (std::abs(qn - 1) > 1e-6)
        warn(fmt::format("{}.quat has norm {}; renormalizing", n.path(), qn));
    if (std::abs(qn - 1) > 1e-9) g.rotation = normalize(g.rotation);

    const Node a = n["appearance"];
    a.expect_object({"emissive", "reflective"});
    if (a.raw().size() != 1) fail("{}: expected exactly one of emissive or reflective", a.path());
    if (a.has("emissive")) {
        g.appearance = Emissive{a["emissive"].vec3()};
    } else {
        const Node r = a["reflective"];
        r.expect_object({"albedo", "normal", "model"});
        Reflective refl;
        refl.albedo = r["albedo"].vec3();
        refl.normal = r["normal"].vec3();
        if (r.has("model")) {
            const std::string m = r["model"].string();
            if (m == "lambert")
                refl.model = ReflectanceModel::Lambert;
            else if (m == "isotropic")
                refl.model = ReflectanceModel::Isotropic;
            else
                fail("{}.model: expected \"lambert\" or \"isotropic\", got \"{}\"", r.path(), m);
        }
        const double nn = length(refl.normal);
        if (nn == 0) fail("{}.normal: zero vector", r.path());
        if (std::abs(nn - 1) > 1e-6) warn(fmt::format("{}.normal has length {}; renormalizing", r.path(), nn));
        if (std::abs(nn - 1) > 1e-9) refl.normal = refl.normal / nn;
        g.appearance = refl;
    }
    check(g, n.path());
    return g;
}

json gaussian_json(const Gaussian &g) {
    json a;
    if (const auto *e = std::get_if<Emissive>(&g.appearance)) {
        a["emissive"] = to_json(e->rgb);
    } else {
        const auto &r = std::get<Reflective>(g.appearance);
        a["reflective"] = {{"albedo", to_json(r.albedo)},
                           {"normal", to_json(r.normal)},
                           {"model", r.model == ReflectanceModel::Lambert ? "lambert" : "isotropic"}};
    }
    const Quat &q = g.rotation;
    return {{"mean", to_json(g.mean)},
            {"quat", json::array({q.w, q.x, q.y, q.z})},
            {"log_scales", to_json(g.log_scales)},
            {"density_logit", g.density_logit},
            {"appearance", a}};
}

Light parse_light(const Node &n, const fs::path &base_dir) {
    n.expect_object({"point", "directional", "envmap"});
    if (n.raw().size() != 1) fail("{}: expected exactly one light type", n.path());
    Light light;
    if (n.has("point")) {
        const Node p = n["point"];
        p.expect_object({"position", "intensity"});
        light = PointLight{p["position"].vec3(), p["intensity"].vec3()};
    } else if (n.has("directional")) {
        const Node d = n["directional"];
        d.expect_object({"dir", "irradiance"});
        DirectionalLight dl{d["dir"].vec3(), d["irradiance"].vec3()};
        const double len = length(dl.dir);
        if (len == 0) fail("{}.dir: zero vector", d.path());
        if (std::abs(len - 1) > 1e-9) dl.dir = dl.dir / len;
        light = dl;
    } else {
        const Node e = n["envmap"];
        if (e.has("file")) {
            e.expect_object({"file"});
            const std::string file = e["file"].string();
            const fs::path p = fs::path(file).is_absolute() ? fs::path(file) : base_dir / file;
            EnvmapLight env;
            try {
                env = read_envmap(p);
            } catch (const Error &err) {
                fail("{}.file: {}", e.path(), err.what());
            }
            env.source = file;
            light = std::move(env);
        } else {
            e.expect_object({"width", "height", "radiance"});
            EnvmapLight env;
            const std::int64_t w = e["width"].integer(), h = e["height"].integer();
            if (w < 1 || h < 1 || w * h > (1 << 26)) fail("{}: invalid envmap size {}x{}", e.path(), w, h);
            env.width = int(w);
            env.height = int(h);
            const Node r = e["radiance"];
            if (r.size() != std::size_t(w * h)) fail("{}: expected {} texels, got {}", r.path(), w * h, r.size());
            env.radiance.clear();
            for (std::size_t i = 0; i < r.size(); ++i) env.radiance.push_back(r[i].vec3());
            light = std::move(env);
        }
    }
    check(light, n.path());
    return light;
}

json light_json(const Light &light) {
    if (const auto *p = std::get_if<PointLight>(&light))
        return {{"point", {{"position", to_json(p->position)}, {"intensity", to_json(p->intensity)}}}};
    if (const auto *d = std::get_if<DirectionalLight>(&light))
        return {{"directional", {{"dir", to_json(d->dir)}, {"irradiance", to_json(d->irradiance)}}}};
    const auto &e = std::get<EnvmapLight>(light);
    if (!e.source.empty()) return {{"envmap", {{"file", e.source}}}};
    json texels = json::array();
    for (const Vec3 &v : e.radiance) texels.push_back(to_json(v));
    return {{"envmap", {{"width", e.width}, {"height", e.height}, {"radiance", texels}}}};
}

Camera parse_camera(const Node &n) {
    n.expect_object({"type", "pose", "fov", "width", "height"});
    const auto p = n["pose"].numbers(12);
    RigidTransform pose;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose.rotation(r, c) = p[std::size_t(4 * r + c)];
        pose.translation[r] = p[std::size_t(4 * r + 3)];
    }
    const std::int64_t w = n["width"].integer(), h = n["height"].integer();
    if (w < 1 || h < 1 || w > 1 << 16 || h > 1 << 16) fail("{}: invalid image size {}x{}", n.path(), w, h);
    const double fov = n["fov"].number();
    const std::string type = n["type"].string();
    Camera cam;
    if (type == "pinhole")
        cam = PinholeCamera{pose, fov, int(w), int(h)};
    else if (type == "fisheye")
        cam = FisheyeCamera{pose, fov, int(w), int(h)};
    else
        fail("{}.type: expected \"pinhole\" or \"fisheye\", got \"{}\"", n.path(), type);
    check(cam, n.path());
    return cam;
}

json camera_json(const Camera &cam) {
    const RigidTransform &p = pose(cam);
    json pj = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pj.push_back(p.rotation(r, c));
        pj.push_back(p.translation[r]);
    }
    const bool pinhole = std::holds_alternative<PinholeCamera>(cam);
    const double fov = pinhole ? std::get<PinholeCamera>(cam).fov_y : std::get<FisheyeCamera>(cam).fov;
    return {{"type", pinhole ? "pinhole" : "fisheye"},
            {"pose", pj},
            {"fov", fov},
            {"width", width(cam)},
            {"height", height(cam)}};
}

std::vector<Camera> parse_cameras(const Node &n) {
    std::vector<Camera> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(parse_camera(n[i]));
    return out;
}

json cameras_json(std::span<const Camera> cams) {
    json out = json::array();
    for (const Camera &c : cams) out.push_back(camera_json(c));
    return out;
}

std::uint32_t read_u32_le(const unsigned char *p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

void put_u32_le(std::string &out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(char((v >> (8 * k)) & 0xff));
}

}  // namespace

std::string read_text(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open {}", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail("error reading {}", path.string());
    return ss.str();
}

void write_text(const std::string &text, const fs::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open {} for writing", path.string());
    out.write(text.data(), std::streamsize(text.size()));
    if (!out) fail("error writing {}", path.string());
}

Scene parse_scene(const std::string &text, const fs::path &base_dir) {
    const json doc = parse_json(text, "scene");
    const Node root(doc, "");
    root.expect_object({"background", "gaussians", "lights", "cameras"});
    Scene scene;
    scene.background = root["background"].vec3();
    const Node gs = root["gaussians"];
    for (std::size_t i = 0; i < gs.size(); ++i) scene.gaussians.push_back(parse_gaussian(gs[i]));
    const Node ls = root["lights"];
    for (std::size_t i = 0; i < ls.size(); ++i) scene.lights.push_back(parse_light(ls[i], base_dir));
    scene.cameras = parse_cameras(root["cameras"]);
    validate(scene);
    return scene;
}

std::string format_scene(const Scene &scene) {
    json gs = json::array(), ls = json::array();
    for (const Gaussian &g : scene.gaussians) gs.push_back(gaussian_json(g));
    for (const Light &l : scene.lights) ls.push_back(light_json(l));
    const json doc = {{"background", to_json(scene.background)},
                      {"gaussians", gs},
                      {"lights", ls},
                      {"cameras", cameras_json(scene.cameras)}};
    return doc.dump(1) + "\n";
}

Scene read_scene(const fs::path &path) {
    try {
        return parse_scene(read_text(path), path.parent_path());
    } catch (const Error &e) {
        fail("{}: {}", path.string(), e.what());
    }
}

void write_scene(const Scene &scene, const fs::path &path) { write_text(format_scene(scene), path); }

std::vector<Light> read_lights(const fs::path &path) {
    try {
        const json doc = parse_json(read_text(path), "lights");
        const Node root(doc, "");
        root.expect_object({"lights"});
        const Node ls = root["lights"];
        std::vector<Light> out;
        for (std::size_t i = 0; i < ls.size(); ++i) out.push_back(parse_light(ls[i], path.parent_path()));
        return out;
    } catch (const Error &e) {
        fail("{}: {}", path.string(), e.what());
    }
}

EnvmapLight read_envmap(const fs::path &path) {
    const std::string bytes = read_text(path);
    const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
    if (bytes.size() < 16 || std::memcmp(p, "ENVF", 4) != 0) fail("{}: not an ENVF file", path.string());
    const std::uint32_t w = read_u32_le(p + 4), h = read_u32_le(p + 8), c = read_u32_le(p + 12);
    if (c != 3) fail("{}: expected 3 channels, got {}", path.string(), c);
    if (w < 1 || h < 1 || std::uint64_t(w) * h > (1u << 26)) fail("{}: invalid size {}x{}", path.string(), w, h);
    const std::size_t n = std::size_t(w) * h;
    if (bytes.size() != 16 + 12 * n)
        fail("{}: expected {} bytes of texels, got {}", path.string(), 12 * n, bytes.size() - 16);
    EnvmapLight env;
    env.width = int(w);
    env.height = int(h);
    env.radiance.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k)
            env.radiance[i][k] = double(std::bit_cast<float>(read_u32_le(p + 16 + 12 * i + 4 * k)));
    check(Light{env}, path.string());
    return env;
}

void write_envmap(const EnvmapLight &env, const fs::path &path) {
    check(Light{env}, "envmap");
    std::string out = "ENVF";
    put_u32_le(out, std::uint32_t(env.width));
    put_u32_le(out, std::uint32_t(env.height));
    put_u32_le(out, 3);
    for (const Vec3 &v : env.radiance)
        for (int k = 0; k < 3; ++k) put_u32_le(out, std::bit_cast<std::uint32_t>(float(v[k])));
    write_text(out, path);
}

Dataset read_dataset(const fs::path &dir) {
    std::vector<Camera> cams;
    std::vector<std::vector<Light>> lights;
    try {
        const json doc = parse_json(read_text(dir / "cameras.json"), "cameras.json");
        const Node root(doc, "");
        root.expect_object({"cameras", "view_lights"});
        cams = parse_cameras(root["cameras"]);
        lights.resize(cams.size());
        if (root.has("view_lights")) {
            const Node vl = root["view_lights"];
            if (vl.size() != cams.size())
                fail("{}: expected {} entries, one per camera, got {}", vl.path(), cams.size(), vl.size());
            for (std::size_t v = 0; v < vl.size(); ++v)
                for (std::size_t k = 0; k < vl[v].size(); ++k) lights[v].push_back(parse_light(vl[v][k], dir));
        }
    } catch (const Error &e) {
        fail("{}: {}", (dir / "cameras.json").string(), e.what());
    }
    Dataset data;
    for (std::size_t v = 0; v < cams.size(); ++v) {
        const fs::path img = dir / "images" / fmt::format("view_{:04d}.csv", v);
        View view{cams[v], read_image_csv(img), std::move(lights[v])};
        if (view.target.width != width(view.camera) || view.target.height != height(view.camera))
            fail("{}: image is {}x{} but camera {} is {}x{}", img.string(), view.target.width, view.target.height,
                 v, width(view.camera), height(view.camera));
        data.views.push_back(std::move(view));
    }
    return data;
}

void write_dataset(const Dataset &data, const fs::path &dir) {
    fs::create_directories(dir / "images");
    std::vector<Camera> cams;
    json view_lights = json::array();
    bool any_lights = false;
    for (const View &v : data.views) {
        cams.push_back(v.camera);
        json ls = json::array();
        for (const Light &l : v.lights) ls.push_back(light_json(l));
        any_lights = any_lights || !v.lights.empty();
        view_lights.push_back(ls);
    }
    json doc = {{"cameras", cameras_json(cams)}};
    if (any_lights) doc["view_lights"] = view_lights;
    write_text(doc.dump(1) + "\n", dir / "cameras.json");
    for (std::size_t v = 0; v < data.views.size(); ++v)
        write_image(data.views[v].target, dir / "images" / fmt::format("view_{:04d}.csv", v), ImageFormat::Csv);
}

TrainConfig parse_train_config(const std::string &text) {
    const json doc = parse_json(text, "config");
    const Node root(doc, "config");
    root.expect_object({"iterations", "forward_samples", "backward_samples", "lr", "lr_decay", "scene_extent", "forward_mode",
                        "backward_mode", "seed", "batch_size", "batches", "threads", "checkpoint_every",
                        "env_samples"});
    TrainConfig cfg;
    auto int_field = [&](const char *key, int &out) {
        if (!root.has(key)) return;
        const std::int64_t v = root[key].integer();
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
            fail("{}.{}: out of range", root.path(), key);
        out = int(v);
    };
    int_field("iterations", cfg.iterations);
    int_field("forward_samples", cfg.forward_samples);
    int_field("backward_samples", cfg.backward_samples);
    int_field("batch_size", cfg.batch_size);
    int_field("threads", cfg.threads);
    int_field("checkpoint_every", cfg.checkpoint_every);
    int_field("env_samples", cfg.shade.env_samples);
    if (root.has("scene_extent")) cfg.scene_extent = root["scene_extent"].number();
    if (root.has("lr_decay")) cfg.lr_decay = root["lr_decay"].number();
    if (root.has("seed")) {
        const json &s = root["seed"].raw();
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            fail("config.seed: expected a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    if (root.has("lr")) {
        const Node lr = root["lr"];
        lr.expect_object({"mean", "rotation", "log_scales", "density_logit", "appearance"});
        if (lr.has("mean")) cfg.lr.mean = lr["mean"].number();
        if (lr.has("rotation")) cfg.lr.rotation = lr["rotation"].number();
        if (lr.has("log_scales")) cfg.lr.log_scales = lr["log_scales"].number();
        if (lr.has("density_logit")) cfg.lr.density_logit = lr["density_logit"].number();
        if (lr.has("appearance")) cfg.lr.appearance = lr["appearance"].number();
    }
    if (root.has("forward_mode")) {
        const std::string m = root["forward_mode"].string();
        if (m == "sorted")
            cfg.forward_mode = ForwardMode::Sorted;
        else if (m == "stochastic")
            cfg.forward_mode = ForwardMode::Stochastic;
        else
            fail("config.forward_mode: expected \"sorted\" or \"stochastic\", got \"{}\"", m);
    }
    if (root.has("backward_mode")) {
        const std::string m = root["backward_mode"].string();
        if (m == "stochastic")
            cfg.backward_mode = BackwardMode::Stochastic;
        else if (m == "analytic")
            cfg.backward_mode = BackwardMode::Analytic;
        else
            fail("config.backward_mode: expected \"stochastic\" or \"analytic\", got \"{}\"", m);
    }
    if (root.has("batches")) {
        const Node bs = root["batches"];
        for (std::size_t b = 0; b < bs.size(); ++b) {
            const Node batch = bs[b];
            std::vector<int> views;
            for (std::size_t k = 0; k < batch.size(); ++k) {
                const std::int64_t v = batch[k].integer();
                if (v < 0 || v > std::numeric_limits<int>::max()) fail("{}: invalid view index", batch[k].path());
                views.push_back(int(v));
            }
            cfg.batches.push_back(std::move(views));
        }
    }
    return cfg;
}

TrainConfig read_train_config(const fs::path &path) {
    try {
        return parse_train_config(read_text(path));
    } catch (const Error &e) {
        fail("{}: {}", path.string(), e.what());
    }
}

void write_loss_reports(std::span<const LossReport> reports, const fs::path &path) {
    std::string out = "iteration,loss,psnr,fwd_ms,bwd_ms,upd_ms\n";
    for (const LossReport &r : reports)
        out += fmt::format("{},{},{},{:.3f},{:.3f},{:.3f}\n", r.iteration, r.loss, r.psnr, r.forward_ms,
                           r.backward_ms, r.update_ms);
    write_text(out, path);
}

}  // namespace sgrt
