// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/blend.h>
#include <sgrt/rng.h>
#include <sgrt/scene.h>

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgrt {

// Pixel-color partials for one Gaussian on one ray. dC/dc is the same scalar
// for every channel, so it is stored once.
struct RayGradEntry {
    std::uint32_t id = kNoGaussian;
    double d_color = 0;
    Vec3 d_alpha;
};

struct RayGrad {
    std::vector<RayGradEntry> entries;
    // Hits with alpha > 0.99 that received a 1/(1 - alpha) term.
    std::size_t near_singular = 0;

    RayGradEntry &entry(std::uint32_t id);
    const RayGradEntry *find(std::uint32_t id) const;
    void scale(double s);
};

// Exact dC/dc_i and dC/dalpha_i for every hit, with the background
// contributing behind the last hit. Entries come out front to back.
RayGrad analytic_grads(std::span<const Hit> hits, std::span<const Vec3> colors,
                       const Vec3 &background);
// Colors aligned with hits rather than indexed by id.
RayGrad analytic_grads_aligned(std::span<const Hit> hits, std::span<const Vec3> colors,
                               const Vec3 &background);

// Indices sampled for one backward round: I in front, K behind it.
struct SampleRecord {
    std::uint32_t front = kNoGaussian;
    std::uint32_t behind = kNoGaussian;
    double front_alpha = 1;
    double front_depth = kInfinity;
    double behind_depth = kInfinity;

    bool operator==(const SampleRecord &) const = default;
};

// Samples I for every round in one traversal, then K behind each I in a
// second traversal. Streams are key.with_phase(PickFront / PickBehind).with_sample(m).
std::vector<SampleRecord> sample_records(const TracedScene &scene, const Ray &ray, int rounds,
                                         const RngKey &key);

// Evaluates the color of a picked Gaussian for round m. `behind` is true for
// the K pick (c-) and false for the I pick (c+).
using PickColorFn = std::function<Vec3(std::uint32_t id, double depth, int round, bool behind)>;

// Two-pick estimator: per round <dC/dc>_I += 1 and <dC/dalpha>_I += (c_I - c_K) / alpha_I,
// with c_K = background when no K exists; averaged over rounds. When `records`
// is given the indices are replayed instead of resampled.
RayGrad stochastic_grads(const TracedScene &scene, const Ray &ray, int rounds, const RngKey &key,
                         const PickColorFn &color,
                         std::optional<std::span<const SampleRecord>> records = std::nullopt);
// Emissive-only convenience overload.
RayGrad stochastic_grads(const TracedScene &scene, const Ray &ray, int rounds, const RngKey &key);
// Same estimator over a materialized hit list with aligned colors, drawing
// from the same streams as the traced version.
RayGrad stochastic_grads(std::span<const Hit> hits, std::span<const Vec3> colors, const Vec3 &background,
                         int rounds, const RngKey &key);

// Alternative estimator: per round <dC/dalpha>_I += c_I / alpha_I and, for each
// hit k in front of I, <dC/dalpha>_k -= c_I / (1 - alpha_k). An empty pick
// uses the background and treats every hit as in front. Works on a
// materialized hit list since it revisits all k in front of I.
RayGrad ssplats_grads(std::span<const Hit> hits, std::span<const Vec3> colors,
                      const Vec3 &background, int rounds, const RngKey &key);
RayGrad ssplats_grads(const TracedScene &scene, const Ray &ray, int rounds, const RngKey &key);

// Per-component statistics of both estimators over independent trials of
// `rounds` rounds each. Trials share RNG keys between the estimators, so
// their front picks are paired.
struct ComponentStats {
    std::uint32_t id = kNoGaussian;
    std::string param;  // "d_color", "d_alpha.r", "d_alpha.g" or "d_alpha.b"
    double analytic = 0;
    double mean_ours = 0, var_ours = 0;
    double mean_ssplats = 0, var_ssplats = 0;
    std::size_t trials = 0;

    double stderr_ours() const { return std::sqrt(var_ours / double(trials)); }
    double stderr_ssplats() const { return std::sqrt(var_ssplats / double(trials)); }
    // Var[ssplats] / Var[ours]; infinite when ours has zero variance.
    double ratio() const;
};

std::vector<ComponentStats> compare_estimators(std::span<const Hit> hits, std::span<const Vec3> colors,
                                               const Vec3 &background, int rounds, std::size_t trials,
                                               std::uint64_t seed, bool with_ssplats = true);

// Opacity at the maximum-response point and its total derivatives with
// respect to the raw Gaussian parameters. The peak position moves with the
// parameters but is stationary in the exponent, so the partials at fixed x
// already are the total derivatives. Clamped opacity has zero gradient.
struct OpacityJacobian {
    double alpha = 0;
    bool clamped = false;
    Vec3 d_mean;
    std::array<double, 4> d_rotation{};  // w, x, y, z of the stored quaternion
    Vec3 d_log_scales;
    double d_density_logit = 0;
};

OpacityJacobian opacity_jacobian(const Gaussian &g, const Ray &ray);

// Per-Gaussian dL/dparameter accumulator. `appearance` holds emissive rgb or
// reflective albedo; `normal` is only used by reflective Gaussians.
struct GaussianGrad {
    Vec3 mean;
    std::array<double, 4> rotation{};
    Vec3 log_scales;
    double density_logit = 0;
    Vec3 appearance;
    Vec3 normal;

    GaussianGrad &operator+=(const GaussianGrad &o);
    GaussianGrad operator*(double s) const;
    bool is_finite() const;
    bool operator==(const GaussianGrad &) const = default;
};

using GradBuffer = std::vector<GaussianGrad>;

// Number and names of the flattened parameters of one Gaussian grad.
inline constexpr int kParamsPerGaussian = 17;
double flat_param(const GaussianGrad &g, int k);
const char *param_name(int k);

// Chains dL/dalpha = upstream . dC/dalpha through opacity_jacobian into out.
void backprop_to_params(const Gaussian &g, const Ray &ray, const Vec3 &d_alpha, const Vec3 &upstream,
                        GaussianGrad &out);

struct GradcheckRow {
    std::uint32_t gaussian = 0;
    std::string param;
    double analytic = 0;
    double numeric = 0;
    double rel_error = 0;
};

struct GradcheckReport {
    std::vector<GradcheckRow> rows;
    double max_rel_error = 0;

    bool passed(double tolerance) const { return max_rel_error <= tolerance; }
};

// Scale floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradcheckFloor = 1e-3;

// Compares analytic_grads + backprop against central differences of
// sorted_blend for the loss upstream . C, over every parameter of every
// Gaussian hit by the ray. Requires emissive Gaussians.
GradcheckReport fd_gradcheck(const Scene &scene, const Ray &ray, double step,
                             const Vec3 &upstream = {1.0, 0.5, 0.25});

// fd_gradcheck over rays from every camera through every Gaussian mean, so
// each Gaussian is exercised near its peak from several directions.
GradcheckReport fd_gradcheck_scene(const Scene &scene, double step, const Vec3 &upstream = {1.0, 0.5, 0.25});

}  // namespace sgrt
