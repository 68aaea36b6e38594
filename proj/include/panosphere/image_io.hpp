#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "panosphere/image.hpp"

namespace panosphere {

namespace detail {

struct FileHandle {
  std::FILE* fp = nullptr;
  explicit FileHandle(const std::string& path, const char* mode)
      : fp(std::fopen(path.c_str(), mode)) {}
  ~FileHandle() {
    if (fp) std::fclose(fp);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

inline std::uint8_t to_byte(float v) {
  // round-half-up on the [0,1] -> [0,255] map
  float scaled = std::floor(v * 255.0f + 0.5f);
  if (scaled < 0.0f) scaled = 0.0f;
  if (scaled > 255.0f) scaled = 255.0f;
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace detail

inline void save_png(const std::string& path, const ErpImage& img) {
  detail::FileHandle fh(path, "wb");
  if (!fh.fp) throw io_error("save_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw io_error("save_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("save_png: write failed for " + path);
  }
  png_init_io(png, fh.fp);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  for (int j = 0; j < img.height; ++j) {
    for (int i = 0; i < img.width; ++i)
      for (int c = 0; c < 3; ++c)
        row[static_cast<std::size_t>(i) * 3 + c] = detail::to_byte(img.at(j, i, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline ErpImage load_png(const std::string& path) {
  detail::FileHandle fh(path, "rb");
  if (!fh.fp) throw io_error("load_png: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("load_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("load_png: read failed for " + path);
  }
  png_init_io(png, fh.fp);
  png_read_info(png, info);

  // normalize any input to 8-bit RGB
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  ErpImage img(h, w);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
  for (int j = 0; j < h; ++j) {
    png_read_row(png, row.data(), nullptr);
    for (int i = 0; i < w; ++i)
      for (int c = 0; c < 3; ++c)
        img.at(j, i, c) = row[static_cast<std::size_t>(i) * 3 + c] / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

/// Mask as single-channel PNG: 255 = given, 0 = masked.
inline void save_mask_png(const std::string& path, const MaskMap& mask) {
  detail::FileHandle fh(path, "wb");
  if (!fh.fp) throw io_error("save_mask_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw io_error("save_mask_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("save_mask_png: write failed for " + path);
  }
  png_init_io(png, fh.fp);
  png_set_IHDR(png, info, mask.width, mask.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(mask.width));
  for (int j = 0; j < mask.height; ++j) {
    for (int i = 0; i < mask.width; ++i) row[i] = mask.at(j, i) ? 255 : 0;
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline MaskMap load_mask_png(const std::string& path) {
  ErpImage rgb = load_png(path);
  MaskMap mask(rgb.height, rgb.width);
  for (int j = 0; j < rgb.height; ++j)
    for (int i = 0; i < rgb.width; ++i)
      mask.set(j, i, rgb.luma(j, i) >= 0.5);
  return mask;
}

/// 16-bit grayscale PNG, used for code-index grids.
inline void save_gray16_png(const std::string& path, int height, int width,
                            const std::vector<std::uint16_t>& values) {
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw std::invalid_argument("save_gray16_png: size mismatch");
  detail::FileHandle fh(path, "wb");
  if (!fh.fp) throw io_error("save_gray16_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw io_error("save_gray16_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("save_gray16_png: write failed for " + path);
  }
  png_init_io(png, fh.fp);
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      std::uint16_t v = values[static_cast<std::size_t>(j) * width + i];
      row[static_cast<std::size_t>(i) * 2] = static_cast<std::uint8_t>(v >> 8);
      row[static_cast<std::size_t>(i) * 2 + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline std::vector<std::uint16_t> load_gray16_png(const std::string& path,
                                                  int& height, int& width) {
  detail::FileHandle fh(path, "rb");
  if (!fh.fp) throw io_error("load_gray16_png: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("load_gray16_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("load_gray16_png: read failed for " + path);
  }
  png_init_io(png, fh.fp);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(png, info) != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw data_error("load_gray16_png: " + path + " is not 16-bit grayscale");
  }
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  std::vector<std::uint16_t> values(static_cast<std::size_t>(width) * height);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
  for (int j = 0; j < height; ++j) {
    png_read_row(png, row.data(), nullptr);
    for (int i = 0; i < width; ++i)
      values[static_cast<std::size_t>(j) * width + i] =
          static_cast<std::uint16_t>((row[i * 2] << 8) | row[i * 2 + 1]);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return values;
}

}  // namespace panosphere
