#include "drape/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace drape {

namespace {

unsigned char to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(c * 255.0));
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
    std::vector<unsigned char> bytes(image.size());
    std::transform(image.data().begin(), image.data().end(), bytes.begin(), to_byte);

    png_image info;
    std::memset(&info, 0, sizeof(info));
    info.version = PNG_IMAGE_VERSION;
    info.width = static_cast<png_uint_32>(image.width());
    info.height = static_cast<png_uint_32>(image.height());
    info.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&info, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        throw std::runtime_error("png write failed for " + path.string() + ": " + info.message);
    }
}

Image read_png(const std::filesystem::path& path) {
    png_image info;
    std::memset(&info, 0, sizeof(info));
    info.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&info, path.c_str())) {
        throw std::runtime_error("png read failed for " + path.string() + ": " + info.message);
    }
    info.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> bytes(PNG_IMAGE_SIZE(info));
    if (!png_image_finish_read(&info, nullptr, bytes.data(), 0, nullptr)) {
        png_image_free(&info);
        throw std::runtime_error("png decode failed for " + path.string() + ": " + info.message);
    }
    Image out(static_cast<int>(info.height), static_cast<int>(info.width));
    std::transform(bytes.begin(), bytes.end(), out.data().begin(),
                   [](unsigned char b) { return b / 255.0; });
    return out;
}

Image quantize8(const Image& image) {
    Image out(image.height(), image.width());
    std::transform(image.data().begin(), image.data().end(), out.data().begin(),
                   [](double v) { return to_byte(v) / 255.0; });
    return out;
}

Image flow_magnitude_heatmap(const FlowField& flow, double max_magnitude) {
    Image out(flow.height(), flow.width());
    const double scale = max_magnitude > 0.0 ? 1.0 / max_magnitude : 0.0;
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            const double m = std::hypot(flow.dx(y, x), flow.dy(y, x)) * scale;
            // "hot" ramp: black -> red -> yellow -> white
            out.at(y, x, 0) = std::clamp(3.0 * m, 0.0, 1.0);
            out.at(y, x, 1) = std::clamp(3.0 * m - 1.0, 0.0, 1.0);
            out.at(y, x, 2) = std::clamp(3.0 * m - 2.0, 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace drape
