#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace neuroscreen {

// Single-channel float image, row-major, intensities nominally in [0, 1].
struct ImageF32 {
  int width = 0;
  int height = 0;
  std::vector<float> px;

  ImageF32() = default;
  ImageF32(int w, int h, float fill = 0.0f)
      : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const ImageF32& other) const {
    return width == other.width && height == other.height;
  }
};

// Interleaved 8-bit RGB.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> px;

  ImageRGB() = default;
  ImageRGB(int w, int h)
      : width(w), height(h), px(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int x, int y) {
    return px.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* at(int x, int y) const {
    return px.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// 16-bit grayscale PNG, values clamped to [0,1] and scaled to 0..65535.
void write_png_gray16(const ImageF32& image, const std::filesystem::path& path);

// Reads 8- or 16-bit grayscale PNG back into [0,1] floats.
ImageF32 read_png_gray(const std::filesystem::path& path);

void write_png_rgb8(const ImageRGB& image, const std::filesystem::path& path);

}  // namespace neuroscreen
