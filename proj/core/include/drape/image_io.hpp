#pragma once

#include "drape/core.hpp"

#include <filesystem>

namespace drape {

// 8-bit RGB PNG. Values are clamped to [0,1] and rounded on export.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

// Rounds an image to the 8-bit grid without touching disk.
Image quantize8(const Image& image);

// Flow magnitude as a heatmap (black = 0, white = max_magnitude).
Image flow_magnitude_heatmap(const FlowField& flow, double max_magnitude);

}  // namespace drape
