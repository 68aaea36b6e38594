#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "panosphere/core.hpp"

namespace panosphere {

/// Row-major RGB raster with float channels in [0,1]. Equirectangular
/// layout means width == 2 * height; operations that depend on the
/// sphere mapping check that relation, plain raster ops take any size.
struct ErpImage {
  int height = 0;  // N rows
  int width = 0;   // M columns
  std::vector<float> data;  // ((row * width) + col) * 3 + channel

  ErpImage() = default;
  ErpImage(int n, int m, float fill = 0.0f)
      : height(n), width(m),
        data(static_cast<std::size_t>(n) * static_cast<std::size_t>(m) * 3, fill) {
    if (n <= 0 || m <= 0)
      throw std::invalid_argument("ErpImage: dimensions must be positive");
  }

  float& at(int row, int col, int ch) {
    return data[(static_cast<std::size_t>(row) * width + col) * 3 + ch];
  }
  float at(int row, int col, int ch) const {
    return data[(static_cast<std::size_t>(row) * width + col) * 3 + ch];
  }

  bool is_erp() const { return width == 2 * height; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }

  /// Mean of the three channels at a pixel.
  double luma(int row, int col) const {
    return (static_cast<double>(at(row, col, 0)) + at(row, col, 1) +
            at(row, col, 2)) / 3.0;
  }
};

/// Per-pixel given/masked flags; 1 = pixel is given (inside the viewport).
struct MaskMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  MaskMap() = default;
  MaskMap(int n, int m, bool given = false)
      : height(n), width(m),
        data(static_cast<std::size_t>(n) * static_cast<std::size_t>(m),
             given ? 1 : 0) {
    if (n <= 0 || m <= 0)
      throw std::invalid_argument("MaskMap: dimensions must be positive");
  }

  bool at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col] != 0;
  }
  void set(int row, int col, bool given) {
    data[static_cast<std::size_t>(row) * width + col] = given ? 1 : 0;
  }

  std::size_t count_given() const {
    std::size_t n = 0;
    for (auto v : data) n += (v != 0);
    return n;
  }
};

inline void require_same_dims(const ErpImage& a, const ErpImage& b,
                              const std::string& what) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument(what + ": image dimensions differ");
}

inline void require_same_dims(const ErpImage& a, const MaskMap& m,
                              const std::string& what) {
  if (a.height != m.height || a.width != m.width)
    throw std::invalid_argument(what + ": mask dimensions differ from image");
}

inline void require_erp(const ErpImage& img, const std::string& what) {
  if (!img.is_erp())
    throw std::invalid_argument(what + ": expected width == 2 * height");
}

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

using Rgb = std::array<float, 3>;

}  // namespace panosphere
