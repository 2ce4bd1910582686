#include "l2rir/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

namespace l2rir {
namespace {

std::uint8_t to_byte(double v) {
  const double s = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(s);
}

std::vector<std::uint8_t> read_raw(const std::filesystem::path& path, png_uint_32 format,
                                   int& height, int& width) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buffer;
}

void write_raw(const std::filesystem::path& path, png_uint_32 format, int height, int width,
               const std::vector<std::uint8_t>& buffer) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.format = format;
  image.height = static_cast<png_uint_32>(height);
  image.width = static_cast<png_uint_32>(width);
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

}  // namespace

RGBImage read_png_rgb(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto raw = read_raw(path, PNG_FORMAT_RGB, h, w);
  RGBImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = raw[p + c] / 255.0;
    }
  }
  return img;
}

GrayMap read_png_gray(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto raw = read_raw(path, PNG_FORMAT_GRAY, h, w);
  GrayMap map(h, w);
  auto out = map.plane(0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = raw[i] / 255.0;
  return map;
}

void write_png(const std::filesystem::path& path, const RGBImage& img) {
  const int h = img.height(), w = img.width();
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) raw[p + c] = to_byte(img.at(c, y, x));
    }
  }
  write_raw(path, PNG_FORMAT_RGB, h, w, raw);
}

void write_png(const std::filesystem::path& path, const GrayMap& map) {
  auto in = map.plane(0);
  std::vector<std::uint8_t> raw(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) raw[i] = to_byte(in[i]);
  write_raw(path, PNG_FORMAT_GRAY, map.height(), map.width(), raw);
}

RGBImage quantize_8bit(const RGBImage& img) {
  RGBImage out = img;
  for (double& v : out.values()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace l2rir
