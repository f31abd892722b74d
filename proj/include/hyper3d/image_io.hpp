#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hyper3d {

/// 8-bit grayscale PNG of a row-major height x width image. Values are
/// min-max normalized to [0,255]; a constant image maps to mid grey.
void write_png_gray(const std::filesystem::path& path, int width, int height, std::span<const float> values);

/// NumPy .npy (format 1.0, little-endian float32, C order).
void write_npy(const std::filesystem::path& path, const std::vector<int64_t>& shape, std::span<const float> values);

}  // namespace hyper3d
