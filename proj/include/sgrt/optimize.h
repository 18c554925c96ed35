// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/camera.h>
#include <sgrt/gradients.h>
#include <sgrt/image.h>
#include <sgrt/relight.h>
#include <sgrt/scene.h>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sgrt {

enum class ForwardMode { Sorted, Stochastic };
// Analytic is the sorted reference backward used to validate the estimator.
enum class BackwardMode { Stochastic, Analytic };

struct LearningRates {
    double mean = 1.6e-4;  // multiplied by the scene extent
    double rotation = 1e-3;
    double log_scales = 5e-3;
    double density_logit = 5e-2;
    double appearance = 2.5e-3;  // emissive rgb, albedo and normal
};

struct TrainConfig {
    int iterations = 0;
    int forward_samples = 30;
    int backward_samples = 8;
    LearningRates lr;
    // Every rate is scaled log-linearly from 1 at the first step to this
    // value at the last one; 1 keeps the rates constant.
    double lr_decay = 1;
    // Scale for the mean learning rate; <= 0 derives it from the camera spread.
    double scene_extent = 0;
    ForwardMode forward_mode = ForwardMode::Sorted;
    BackwardMode backward_mode = BackwardMode::Stochastic;
    std::uint64_t seed = 0;
    int batch_size = 1;
    // Explicit view indices per iteration, cycled; overrides batch_size.
    std::vector<std::vector<int>> batches;
    int threads = 1;
    int checkpoint_every = 0;
    ShadeOptions shade;
};

void validate(const TrainConfig &cfg, std::size_t num_views);

struct View {
    Camera camera;
    Image target;
    // Lighting the target was captured under; empty means the scene's lights.
    std::vector<Light> lights;
};

struct Dataset {
    std::vector<View> views;
};

struct L1Loss {
    double loss = 0;
    Image grad;  // sign(r - t) / N per channel
};

L1Loss loss_l1(const Image &render, const Image &target);

// Adam moments per Gaussian (beta1 0.9, beta2 0.999, eps 1e-15).
struct OptState {
    std::vector<GaussianGrad> first, second;
    std::uint64_t step = 0;
};

struct LossReport {
    int iteration = 0;
    double loss = 0;
    double psnr = 0;
    double forward_ms = 0, backward_ms = 0, update_ms = 0, total_ms = 0;
};

struct GradientPass {
    GradBuffer grads;
    double loss = 0;
    double psnr = 0;
    std::vector<Image> renders;
    double forward_ms = 0, backward_ms = 0;
};

// Views used at a given iteration.
std::vector<int> batch_views(const TrainConfig &cfg, std::size_t num_views, int iteration);

// Mean-learning-rate scale: 1.1 x the largest camera distance from the camera centroid.
double scene_extent(const TrainConfig &cfg, const Dataset &data);

// Forward pass with index recording, L1 loss, then the backward pass.
// Per-row gradients are merged in a fixed order, so the result does not
// depend on cfg.threads.
GradientPass compute_gradients(const Scene &scene, const Dataset &data, std::span<const int> views,
                               const TrainConfig &cfg, int iteration);

void adam_step(Scene &scene, const GradBuffer &grads, const TrainConfig &cfg, double extent,
               OptState &state);

LossReport two_pass_iteration(Scene &scene, const Dataset &data, std::span<const int> views,
                              const TrainConfig &cfg, OptState &state, int iteration);

struct TrainResult {
    Scene scene;
    std::vector<LossReport> reports;
};

using CheckpointFn = std::function<void(int iteration, const Scene &scene)>;

TrainResult train(Scene scene, const Dataset &data, const TrainConfig &cfg,
                  const CheckpointFn &checkpoint = {});

}  // namespace sgrt
