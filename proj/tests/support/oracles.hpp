// Independent reference implementations used as test oracles. These stay
// deliberately naive (direct formulas, exhaustive loops) and must not call
// into the code paths they check.
#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "panosphere/image.hpp"

namespace oracles {

inline constexpr double kPi = 3.14159265358979323846;

/// Naive O((hw)^2) evaluation of F(u,v) = sum_x sum_y p(x,y)
/// exp(-j*2*pi*(ux/h + vy/w)).
inline std::vector<std::complex<double>> naive_dft2(
    const std::vector<double>& p, int h, int w) {
  std::vector<std::complex<double>> F(static_cast<std::size_t>(h) * w);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      std::complex<double> acc(0.0, 0.0);
      for (int x = 0; x < h; ++x)
        for (int y = 0; y < w; ++y) {
          double ang = -2.0 * kPi * (static_cast<double>(u) * x / h +
                                     static_cast<double>(v) * y / w);
          acc += p[static_cast<std::size_t>(x) * w + y] *
                 std::complex<double>(std::cos(ang), std::sin(ang));
        }
      F[static_cast<std::size_t>(u) * w + v] = acc;
    }
  return F;
}

/// Explicit associated Legendre polynomials (Condon-Shortley phase) for
/// l <= 3, straight from the closed forms.
inline double legendre_closed(int l, int m, double x) {
  double s = std::sqrt(1.0 - x * x);
  switch (l * 10 + m) {
    case 0: return 1.0;
    case 10: return x;
    case 11: return -s;
    case 20: return 0.5 * (3.0 * x * x - 1.0);
    case 21: return -3.0 * x * s;
    case 22: return 3.0 * (1.0 - x * x);
    case 30: return 0.5 * (5.0 * x * x * x - 3.0 * x);
    case 31: return -1.5 * (5.0 * x * x - 1.0) * s;
    case 32: return 15.0 * x * (1.0 - x * x);
    case 33: return -15.0 * s * s * s;
  }
  return std::nan("");
}

/// Direct evaluation of the real spherical harmonic for l <= 3.
inline double rsh_closed(int l, int m, double theta, double phi) {
  int am = m < 0 ? -m : m;
  double fact_ratio = 1.0;
  for (int k = l - am + 1; k <= l + am; ++k) fact_ratio *= k;
  double norm = std::sqrt((2.0 * l + 1.0) / (2.0 * kPi) / fact_ratio);
  double base = norm * legendre_closed(l, am, std::cos(theta));
  if (m < 0) return base * std::sin(am * phi);
  if (m == 0) return base / std::sqrt(2.0);
  return base * std::cos(m * phi);
}

/// Exhaustive nearest-entry search; lowest index wins ties.
inline int brute_force_nearest(const float* cell, const float* entries, int K,
                               int d) {
  int best = 0;
  double best_dist = 0.0;
  for (int k = 0; k < K; ++k) {
    double acc = 0.0;
    for (int t = 0; t < d; ++t) {
      double diff = static_cast<double>(cell[t]) -
                    static_cast<double>(entries[static_cast<std::size_t>(k) * d + t]);
      acc += diff * diff;
    }
    if (k == 0 || acc < best_dist) {
      best = k;
      best_dist = acc;
    }
  }
  return best;
}

/// Shortest 4-connected path length on an unobstructed grid whose columns
/// wrap: |dr| + min(|dc|, M - |dc|).
inline int wrapped_grid_distance(int r0, int c0, int r1, int c1, int M) {
  int dr = r0 > r1 ? r0 - r1 : r1 - r0;
  int dc = c0 > c1 ? c0 - c1 : c1 - c0;
  return dr + std::min(dc, M - dc);
}

inline panosphere::ErpImage random_image(int N, int M, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  panosphere::ErpImage img(N, M);
  for (auto& v : img.data)
    v = static_cast<float>((eng() >> 11) * 0x1.0p-53);
  return img;
}

}  // namespace oracles
