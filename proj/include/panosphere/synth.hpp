#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "panosphere/core.hpp"
#include "panosphere/image.hpp"
#include "panosphere/sphgeo.hpp"

namespace panosphere {
namespace synth {

inline constexpr std::uint64_t kSynthTag = 0x53594e54;  // "SYNT"

/// Procedural outdoor-like panorama: vertical sky gradient, band-limited
/// terrain waves (integer phi frequencies keep the seam continuous), an
/// undulating horizon, an optional sun disc, and sparse high-frequency
/// strokes standing on the horizon. Deterministic per seed.
inline ErpImage synth_image(int N, int M, std::uint64_t seed) {
  if (M != 2 * N) throw std::invalid_argument("synth_image: expected M == 2N");
  std::mt19937_64 eng(seed);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * rng::uniform01(eng);
  };

  // daylight palette with small per-image jitter; position stays the
  // dominant predictor of patch content across the corpus
  const double jitter = 0.03;
  const double zenith[3] = {0.20 + uni(-jitter, jitter),
                            0.42 + uni(-jitter, jitter),
                            0.80 + uni(-jitter, jitter)};
  const double horizon[3] = {0.76 + uni(-jitter, jitter),
                             0.70 + uni(-jitter, jitter),
                             0.62 + uni(-jitter, jitter)};
  const double ground[3] = {0.30 + uni(-jitter, jitter),
                            0.34 + uni(-jitter, jitter),
                            0.18 + uni(-jitter, jitter)};

  double theta_h = sphgeo::kPi / 2.0 + uni(-0.06, 0.06);
  constexpr int kHorizonWaves = 5;
  double h_amp[kHorizonWaves], h_phase[kHorizonWaves];
  for (int k = 0; k < kHorizonWaves; ++k) {
    h_amp[k] = uni(0.0, 0.02) / (k + 1);
    h_phase[k] = uni(0.0, sphgeo::kTwoPi);
  }

  constexpr int kTerrainWaves = 10;
  int t_freq_phi[kTerrainWaves];
  double t_freq_theta[kTerrainWaves], t_phase[kTerrainWaves], t_amp[kTerrainWaves];
  for (int s = 0; s < kTerrainWaves; ++s) {
    t_freq_phi[s] = 1 + static_cast<int>(uni(0.0, 24.0));
    t_freq_theta[s] = uni(0.0, 12.0);
    t_phase[s] = uni(0.0, sphgeo::kTwoPi);
    t_amp[s] = uni(0.0, 0.06);
  }

  bool has_sun = rng::uniform01(eng) < 0.7;
  double sun_theta = uni(0.2, 1.2), sun_phi = uni(0.0, sphgeo::kTwoPi);
  double sun_radius = uni(0.03, 0.10);
  sphgeo::Vec3 sun_dir = sphgeo::direction({sun_theta, sun_phi});

  int n_strokes = 6 + static_cast<int>(uni(0.0, 13.0));
  std::vector<double> s_phi(n_strokes), s_half(n_strokes), s_height(n_strokes);
  std::vector<float> s_gray(n_strokes);
  for (int s = 0; s < n_strokes; ++s) {
    s_phi[s] = uni(0.0, sphgeo::kTwoPi);
    s_half[s] = uni(0.01, 0.05);
    s_height[s] = uni(0.05, 0.35);
    s_gray[s] = static_cast<float>(uni(0.05, 0.30));
  }

  auto wrap_dist = [](double a, double b) {
    double d = std::fabs(a - b);
    return d > sphgeo::kPi ? sphgeo::kTwoPi - d : d;
  };

  ErpImage img(N, M);
  std::vector<double> horizon_at(M);
  std::vector<double> t_sin_col(static_cast<std::size_t>(kTerrainWaves) * M);
  std::vector<double> t_cos_col(static_cast<std::size_t>(kTerrainWaves) * M);
  for (int i = 0; i < M; ++i) {
    double phi = sphgeo::kTwoPi * (i + 0.5) / M;
    double h = theta_h;
    for (int k = 0; k < kHorizonWaves; ++k)
      h += h_amp[k] * std::sin((k + 1) * phi + h_phase[k]);
    horizon_at[i] = h;
    for (int s = 0; s < kTerrainWaves; ++s) {
      double a = t_freq_phi[s] * phi + t_phase[s];
      t_sin_col[static_cast<std::size_t>(s) * M + i] = std::sin(a);
      t_cos_col[static_cast<std::size_t>(s) * M + i] = std::cos(a);
    }
  }

  for (int j = 0; j < N; ++j) {
    double theta = sphgeo::kPi * (j + 0.5) / N;
    double t_sin_row[kTerrainWaves], t_cos_row[kTerrainWaves];
    for (int s = 0; s < kTerrainWaves; ++s) {
      t_sin_row[s] = std::sin(t_freq_theta[s] * theta);
      t_cos_row[s] = std::cos(t_freq_theta[s] * theta);
    }
    double ct = std::cos(theta), st = std::sin(theta);
    for (int i = 0; i < M; ++i) {
      double phi = sphgeo::kTwoPi * (i + 0.5) / M;
      double h = horizon_at[i];
      double rgb[3];
      if (theta <= h) {
        double t = theta / h;
        t = t * t * (3.0 - 2.0 * t);
        for (int c = 0; c < 3; ++c)
          rgb[c] = zenith[c] + (horizon[c] - zenith[c]) * t;
        if (has_sun) {
          double cosang = ct * sun_dir.z +
                          st * (std::cos(phi) * sun_dir.x + std::sin(phi) * sun_dir.y);
          double ang = std::acos(std::min(1.0, std::max(-1.0, cosang)));
          if (ang < sun_radius) {
            double glow = 1.0 - ang / sun_radius;
            glow = glow * glow * (3.0 - 2.0 * glow);
            const double sun_col[3] = {1.0, 0.95, 0.85};
            for (int c = 0; c < 3; ++c)
              rgb[c] += (sun_col[c] - rgb[c]) * glow;
          }
        }
      } else {
        double tex = 0.0;
        for (int s = 0; s < kTerrainWaves; ++s)
          tex += t_amp[s] * (t_sin_col[static_cast<std::size_t>(s) * M + i] * t_cos_row[s] +
                             t_cos_col[static_cast<std::size_t>(s) * M + i] * t_sin_row[s]);
        for (int c = 0; c < 3; ++c) rgb[c] = ground[c] + tex;
      }
      for (int s = 0; s < n_strokes; ++s) {
        if (wrap_dist(phi, s_phi[s]) >= s_half[s]) continue;
        if (theta <= h && theta >= h - s_height[s]) {
          rgb[0] = rgb[1] = rgb[2] = s_gray[s];
          break;
        }
      }
      for (int c = 0; c < 3; ++c)
        img.at(j, i, c) = clamp01(static_cast<float>(rgb[c]));
    }
  }
  return img;
}

inline std::vector<ErpImage> synth_corpus(int N, int M, int count,
                                          std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("synth_corpus: count must be >= 1");
  std::vector<ErpImage> corpus;
  corpus.reserve(count);
  for (int i = 0; i < count; ++i)
    corpus.push_back(synth_image(N, M, rng::derive(seed, i, kSynthTag)));
  return corpus;
}

}  // namespace synth
}  // namespace panosphere
