// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sgrt/math.h>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sgrt {

// Linear RGB image with 32-bit float channels, row-major.
struct Image {
    int width = 0, height = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h);
    Image(int w, int h, const Vec3 &fill);

    std::size_t pixels() const { return std::size_t(width) * height; }
    Vec3 get(int i, int j) const {
        const std::size_t o = 3 * (std::size_t(j) * width + i);
        return {data[o], data[o + 1], data[o + 2]};
    }
    void set(int i, int j, const Vec3 &v) {
        const std::size_t o = 3 * (std::size_t(j) * width + i);
        data[o] = float(v.x);
        data[o + 1] = float(v.y);
        data[o + 2] = float(v.z);
    }

    bool operator==(const Image &) const = default;
};

// Gamma-2.2 8-bit encoding after clamping to [0, 1].
std::uint8_t encode_gamma(float v);

enum class ImageFormat { Ppm, Csv };

// ppm: binary P6. csv: "width,height" then one "r,g,b" line per pixel in
// row-major order, each float printed so it reads back bit-exactly.
void write_image(const Image &img, const std::filesystem::path &path, ImageFormat format);
Image read_image_csv(const std::filesystem::path &path);
Image read_ppm(const std::filesystem::path &path);

double mse(const Image &a, const Image &b);
// 10 log10(1 / MSE); infinite for identical images.
double psnr(const Image &a, const Image &b);

}  // namespace sgrt
