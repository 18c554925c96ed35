// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/optimize.h>
#include <sgrt/scene.h>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sgrt {

// Scene documents are JSON. Numbers are written in shortest round-trip form,
// so write then read reproduces every double exactly. Unknown keys and
// non-finite values are rejected with the path of the offending field.
// `base_dir` resolves relative envmap file references.
Scene parse_scene(const std::string &text, const std::filesystem::path &base_dir = {});
std::string format_scene(const Scene &scene);
Scene read_scene(const std::filesystem::path &path);
void write_scene(const Scene &scene, const std::filesystem::path &path);

// Light list document: {"lights": [...]} using the scene schema.
std::vector<Light> read_lights(const std::filesystem::path &path);

// "ENVF" binary: magic, u32 width, u32 height, u32 channels = 3, then
// row-major little-endian float32 texels.
EnvmapLight read_envmap(const std::filesystem::path &path);
void write_envmap(const EnvmapLight &env, const std::filesystem::path &path);

// Dataset directory: cameras.json ({"cameras": [...]}) plus
// images/view_0000.csv, ... in camera order.
Dataset read_dataset(const std::filesystem::path &dir);
void write_dataset(const Dataset &data, const std::filesystem::path &dir);

// Training configuration document. Every key is optional; defaults match
// TrainConfig. Errors name the field path, e.g. "config.lr.mean".
TrainConfig parse_train_config(const std::string &text);
TrainConfig read_train_config(const std::filesystem::path &path);

// iteration,loss,psnr,fwd_ms,bwd_ms,upd_ms
void write_loss_reports(std::span<const LossReport> reports, const std::filesystem::path &path);

std::string read_text(const std::filesystem::path &path);
void write_text(const std::string &text, const std::filesystem::path &path);

}  // namespace sgrt
