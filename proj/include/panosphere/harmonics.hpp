#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "panosphere/binio.hpp"
#include "panosphere/core.hpp"
#include "panosphere/sphgeo.hpp"

namespace panosphere {
namespace harmonics {

/// Highest supported band; the normalization ratio loop stays well inside
/// double range up to here.
inline constexpr int kMaxDegree = 12;

/// Associated Legendre P_l^m(x) with the Condon-Shortley phase (-1)^m,
/// by upward recurrence from the P_m^m seed.
inline double assoc_legendre(int l, int m, double x) {
  if (m < 0 || m > l)
    throw std::invalid_argument("assoc_legendre: requires 0 <= m <= l");
  if (x < -1.0 || x > 1.0)
    throw std::invalid_argument("assoc_legendre: |x| must be <= 1");

  double pmm = 1.0;
  if (m > 0) {
    double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
    double fact = 1.0;
    for (int i = 0; i < m; ++i) {
      pmm *= -fact * somx2;
      fact += 2.0;
    }
  }
  if (l == m) return pmm;
  double pmmp1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

/// F_l^m = sqrt((2l+1)/(2*pi) * (l-m)!/(l+m)!), factorial quotient folded
/// into a running product.
inline double rsh_norm(int l, int m) {
  if (m < 0 || m > l)
    throw std::invalid_argument("rsh_norm: requires 0 <= m <= l");
  double ratio = 1.0;  // (l+m)!/(l-m)!
  for (int k = l - m + 1; k <= l + m; ++k) ratio *= k;
  return std::sqrt((2.0 * l + 1.0) / (2.0 * sphgeo::kPi) / ratio);
}

/// Real spherical harmonic Y_l^m(theta, phi):
/// F_l^|m| * P_l^|m|(cos theta) * { sin(|m| phi) for m < 0,
///                                  1/sqrt(2)    for m = 0,
///                                  cos(m phi)   for m > 0 }.
inline double rsh(int l, int m, const sphgeo::SphericalCoord& coord) {
  int am = m < 0 ? -m : m;
  if (am > l) throw std::invalid_argument("rsh: requires |m| <= l");
  double base = rsh_norm(l, am) * assoc_legendre(l, am, std::cos(coord.theta));
  if (m < 0) return base * std::sin(am * coord.phi);
  if (m == 0) return base / std::sqrt(2.0);
  return base * std::cos(m * coord.phi);
}

/// Per-pixel stack of RSH basis values over an ERP grid; channel order is
/// (l, m) lexicographic, l ascending then m = -l..l. Depends only on the
/// grid dimensions, never on pixel values.
struct ShMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;  // ((row * width) + col) * channels + ch

  float at(int row, int col, int ch) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
};

inline int sh_channel_index(int l, int m) { return l * l + (m + l); }

inline ShMap sh_map(int N, int M, int D) {
  if (M != 2 * N) throw std::invalid_argument("sh_map: expected M == 2N");
  if (D < 0 || D > kMaxDegree)
    throw std::invalid_argument("sh_map: degree outside [0, 12]");

  int channels = (D + 1) * (D + 1);
  ShMap map;
  map.height = N;
  map.width = M;
  map.channels = channels;
  map.data.resize(static_cast<std::size_t>(N) * M * channels);

  std::vector<double> norm(channels), leg(channels);
  for (int l = 0; l <= D; ++l)
    for (int m = 0; m <= l; ++m) norm[sh_channel_index(l, m)] = rsh_norm(l, m);

  std::vector<double> sines(D + 1), cosines(D + 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < N; ++j) {
    double ct = std::cos(sphgeo::kPi * (j + 0.5) / N);
    for (int l = 0; l <= D; ++l)
      for (int m = 0; m <= l; ++m)
        leg[sh_channel_index(l, m)] = assoc_legendre(l, m, ct);
    for (int i = 0; i < M; ++i) {
      double phi = sphgeo::kTwoPi * (i + 0.5) / M;
      for (int m = 0; m <= D; ++m) {
        sines[m] = std::sin(m * phi);
        cosines[m] = std::cos(m * phi);
      }
      float* px = &map.data[(static_cast<std::size_t>(j) * M + i) * channels];
      for (int l = 0; l <= D; ++l) {
        for (int m = -l; m <= l; ++m) {
          int am = m < 0 ? -m : m;
          int pos = sh_channel_index(l, am);
          double base = norm[pos] * leg[pos];
          double v = m < 0 ? base * sines[am]
                           : (m == 0 ? base * inv_sqrt2 : base * cosines[m]);
          px[sh_channel_index(l, m)] = static_cast<float>(v);
        }
      }
    }
  }
  return map;
}

/// Flat binary layout: "SHMP", u32 N, u32 M, u32 channels, then
/// little-endian f32 values in (row, col, channel) order.
inline void shmap_save(const std::string& path, const ShMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("shmap_save: cannot open " + path);
  os.write("SHMP", 4);
  binio::write_u32_le(os, static_cast<std::uint32_t>(map.height));
  binio::write_u32_le(os, static_cast<std::uint32_t>(map.width));
  binio::write_u32_le(os, static_cast<std::uint32_t>(map.channels));
  for (float v : map.data) binio::write_f32_le(os, v);
  if (!os) throw io_error("shmap_save: write failed for " + path);
}

inline ShMap shmap_load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("shmap_load: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SHMP", 4) != 0)
    throw data_error("shmap_load: bad magic in " + path);
  ShMap map;
  map.height = static_cast<int>(binio::read_u32_le(is));
  map.width = static_cast<int>(binio::read_u32_le(is));
  map.channels = static_cast<int>(binio::read_u32_le(is));
  std::size_t count = static_cast<std::size_t>(map.height) * map.width * map.channels;
  map.data.resize(count);
  for (std::size_t k = 0; k < count; ++k) map.data[k] = binio::read_f32_le(is);
  if (!is) throw data_error("shmap_load: truncated file " + path);
  return map;
}

}  // namespace harmonics
}  // namespace panosphere
