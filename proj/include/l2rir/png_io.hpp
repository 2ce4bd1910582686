#pragma once

#include <filesystem>

#include "l2rir/image.hpp"

namespace l2rir {

// 8-bit PNG I/O. Bytes map to values as v = byte / 255 and back as
// round(v * 255). Throws IoError on unreadable or unwritable files.
RGBImage read_png_rgb(const std::filesystem::path& path);
GrayMap read_png_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RGBImage& img);
void write_png(const std::filesystem::path& path, const GrayMap& map);

// Quantizes through the 8-bit file mapping without touching disk.
RGBImage quantize_8bit(const RGBImage& img);

}  // namespace l2rir
