// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#include <sgrt/error.h>
#include <sgrt/image.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace sgrt {

Image::Image(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) fail("image dimensions must be positive, got {}x{}", w, h);
    data.assign(3 * pixels(), 0.0f);
}

Image::Image(int w, int h, const Vec3 &fill) : Image(w, h) {
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) set(i, j, fill);
}

std::uint8_t encode_gamma(float v) {
    const double c = std::clamp(double(v), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(255.0 * std::pow(c, 1.0 / 2.2)));
}

namespace {

std::string format_float(float v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

float parse_float(std::string_view s, const std::filesystem::path &path, std::size_t line) {
    float v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail("{}:{}: cannot parse '{}' as a float", path.string(), line, s);
    return v;
}

}  // namespace

void write_image(const Image &img, const std::filesystem::path &path, ImageFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open '{}' for writing", path.string());
    if (format == ImageFormat::Ppm) {
        out << "P6\n" << img.width << " " << img.height << "\n255\n";
        std::vector<char> bytes(img.data.size());
        for (std::size_t k = 0; k < img.data.size(); ++k) bytes[k] = char(encode_gamma(img.data[k]));
        out.write(bytes.data(), std::streamsize(bytes.size()));
    } else {
        out << img.width << "," << img.height << "\n";
        for (std::size_t p = 0; p < img.pixels(); ++p)
            out << format_float(img.data[3 * p]) << "," << format_float(img.data[3 * p + 1]) << ","
                << format_float(img.data[3 * p + 2]) << "\n";
    }
    if (!out) fail("error while writing '{}'", path.string());
}

Image read_image_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '{}'", path.string());
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) fail("{}: empty file", path.string());
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail("{}:1: expected 'width,height'", path.string());
    const int w = std::stoi(line.substr(0, comma));
    const int h = std::stoi(line.substr(comma + 1));
    Image img(w, h);
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        ++lineno;
        if (!std::getline(in, line)) fail("{}: expected {} pixels, got {}", path.string(), img.pixels(), p);
        std::string_view rest = line;
        for (int c = 0; c < 3; ++c) {
            const auto pos = c < 2 ? rest.find(',') : rest.size();
            if (pos == std::string_view::npos) fail("{}:{}: expected three values", path.string(), lineno);
            img.data[3 * p + c] = parse_float(rest.substr(0, pos), path, lineno);
            if (c < 2) rest.remove_prefix(pos + 1);
        }
    }
    return img;
}

Image read_ppm(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '{}'", path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255) fail("{}: not an 8-bit P6 file", path.string());
    in.get();
    Image img(w, h);
    std::vector<unsigned char> bytes(img.data.size());
    in.read(reinterpret_cast<char *>(bytes.data()), std::streamsize(bytes.size()));
    if (!in) fail("{}: truncated pixel data", path.string());
    for (std::size_t k = 0; k < bytes.size(); ++k)
        img.data[k] = float(std::pow(bytes[k] / 255.0, 2.2));
    return img;
}

double mse(const Image &a, const Image &b) {
    if (a.width != b.width || a.height != b.height)
        fail("image size mismatch: {}x{} vs {}x{}", a.width, a.height, b.width, b.height);
    double s = 0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double d = double(a.data[k]) - double(b.data[k]);
        s += d * d;
    }
    return s / double(a.data.size());
}

double psnr(const Image &a, const Image &b) {
    const double m = mse(a, b);
    return m == 0 ? kInfinity : 10.0 * std::log10(1.0 / m);
}

}  // namespace sgrt
