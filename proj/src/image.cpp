#include "neuroscreen/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>

#include "neuroscreen/errors.hpp"

namespace neuroscreen {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail_io(const std::filesystem::path& path, const char* what) {
  throw IoError(std::string(what) + ": " + path.string());
}

}  // namespace

void write_png_gray16(const ImageF32& image, const std::filesystem::path& path) {
  if (image.width <= 0 || image.height <= 0) fail_io(path, "refusing to write empty image");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) fail_io(path, "cannot open for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) fail_io(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    fail_io(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail_io(path, "libpng write error");
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint16_t> row(static_cast<std::size_t>(image.width));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const float v = std::clamp(image.at(x, y), 0.0f, 1.0f);
      const auto q = static_cast<std::uint16_t>(v * 65535.0f + 0.5f);
      // PNG stores 16-bit samples big-endian.
      row[static_cast<std::size_t>(x)] = static_cast<std::uint16_t>((q >> 8) | (q << 8));
    }
    png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageF32 read_png_gray(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) fail_io(path, "cannot open for reading");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) fail_io(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail_io(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail_io(path, "libpng read error");
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  bit_depth = png_get_bit_depth(png, info);

  ImageF32 out(static_cast<int>(width), static_cast<int>(height));
  if (bit_depth == 16) {
    std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
    for (png_uint_32 y = 0; y < height; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (png_uint_32 x = 0; x < width; ++x) {
        const std::uint16_t v = static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
        out.at(static_cast<int>(x), static_cast<int>(y)) = v / 65535.0f;
      }
    }
  } else {
    std::vector<std::uint8_t> row(static_cast<std::size_t>(width));
    for (png_uint_32 y = 0; y < height; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (png_uint_32 x = 0; x < width; ++x) {
        out.at(static_cast<int>(x), static_cast<int>(y)) = row[x] / 255.0f;
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png_rgb8(const ImageRGB& image, const std::filesystem::path& path) {
  if (image.width <= 0 || image.height <= 0) fail_io(path, "refusing to write empty image");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) fail_io(path, "cannot open for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) fail_io(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    fail_io(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail_io(path, "libpng write error");
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.at(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace neuroscreen
