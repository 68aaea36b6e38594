#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <vector>

#include "panosphere/image.hpp"
#include "panosphere/quantizer.hpp"
#include "panosphere/spectrum.hpp"

namespace panosphere {
namespace refine {

/// Bilinear 2x upscale. Columns interpolate across the phi seam (the left
/// and right edges are neighbors); rows clamp at the poles.
inline ErpImage upscale2x(const ErpImage& image) {
  int N = image.height, M = image.width;
  ErpImage out(2 * N, 2 * M);
  for (int J = 0; J < 2 * N; ++J) {
    double sy = (J + 0.5) / 2.0 - 0.5;
    int j0 = static_cast<int>(std::floor(sy));
    double ty = sy - j0;
    int ja = std::min(N - 1, std::max(0, j0));
    int jb = std::min(N - 1, std::max(0, j0 + 1));
    for (int I = 0; I < 2 * M; ++I) {
      double sx = (I + 0.5) / 2.0 - 0.5;
      int i0 = static_cast<int>(std::floor(sx));
      double tx = sx - i0;
      int ia = ((i0 % M) + M) % M;
      int ib = (ia + 1) % M;
      for (int c = 0; c < 3; ++c) {
        double top = (1.0 - tx) * image.at(ja, ia, c) + tx * image.at(ja, ib, c);
        double bot = (1.0 - tx) * image.at(jb, ia, c) + tx * image.at(jb, ib, c);
        out.at(J, I, c) = static_cast<float>((1.0 - ty) * top + ty * bot);
      }
    }
  }
  return out;
}

/// 2x2 box-filter downscale; dimensions must be even.
inline ErpImage downscale2x(const ErpImage& image) {
  if (image.height % 2 != 0 || image.width % 2 != 0)
    throw std::invalid_argument("downscale2x: dimensions must be even");
  ErpImage out(image.height / 2, image.width / 2);
  for (int j = 0; j < out.height; ++j)
    for (int i = 0; i < out.width; ++i)
      for (int c = 0; c < 3; ++c)
        out.at(j, i, c) = static_cast<float>(
            (static_cast<double>(image.at(2 * j, 2 * i, c)) +
             image.at(2 * j, 2 * i + 1, c) + image.at(2 * j + 1, 2 * i, c) +
             image.at(2 * j + 1, 2 * i + 1, c)) /
            4.0);
  return out;
}

/// Brightness / contrast / saturation deltas, each in [-0.5, 0.5].
struct JitterParams {
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
  std::uint64_t seed = 0;

  static JitterParams from_seed(std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    JitterParams p;
    p.brightness = rng::uniform01(eng) - 0.5;
    p.contrast = rng::uniform01(eng) - 0.5;
    p.saturation = rng::uniform01(eng) - 0.5;
    p.seed = seed;
    return p;
  }
};

/// Applies brightness (additive), contrast (scale around the image mean),
/// then saturation (blend toward per-pixel luma by |delta|); the result is
/// clamped to [0,1] at the end.
inline ErpImage color_jitter(const ErpImage& image, const JitterParams& params) {
  auto in_range = [](double v) { return v >= -0.5 && v <= 0.5; };
  if (!in_range(params.brightness) || !in_range(params.contrast) ||
      !in_range(params.saturation))
    throw std::invalid_argument("color_jitter: deltas outside [-0.5, 0.5]");

  std::vector<double> work(image.data.begin(), image.data.end());
  for (auto& v : work) v += params.brightness;

  double mean = 0.0;
  for (double v : work) mean += v;
  mean /= static_cast<double>(work.size());
  double gain = 1.0 + params.contrast;
  for (auto& v : work) v = mean + (v - mean) * gain;

  double sat = std::fabs(params.saturation);
  ErpImage out(image.height, image.width);
  std::size_t px = 0;
  for (std::size_t k = 0; k < work.size(); k += 3, ++px) {
    double luma = (work[k] + work[k + 1] + work[k + 2]) / 3.0;
    for (int c = 0; c < 3; ++c) {
      double v = work[k + c] + (luma - work[k + c]) * sat;
      out.data[k + c] = clamp01(static_cast<float>(v));
    }
  }
  return out;
}

/// Refinement training proxy: downscale 2x, reconstruct through the
/// codebook, upscale back to the original size.
inline ErpImage scale_cycle(const ErpImage& image, const quant::Codebook& cb,
                            int f) {
  if (image.height % 2 != 0 || image.width % 2 != 0 ||
      (image.height / 2) % f != 0 || (image.width / 2) % f != 0)
    throw std::invalid_argument("scale_cycle: dims must halve and divide by f");
  ErpImage down = downscale2x(image);
  ErpImage recon = quant::reconstruct(down, cb, f).image;
  return upscale2x(recon);
}

/// Feathered blend weights from the mask: 0 on masked-out pixels, ramping
/// to 1 over `feather` pixels of 4-connected distance inside the given
/// region (columns wrap across the phi seam). feather = 0 is the hard mask.
inline std::vector<double> blend_alpha(const MaskMap& mask, int feather) {
  if (feather < 0) throw std::invalid_argument("blend_alpha: feather < 0");
  int N = mask.height, M = mask.width;
  std::vector<double> alpha(static_cast<std::size_t>(N) * M, 0.0);
  if (feather == 0) {
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < M; ++i)
        alpha[static_cast<std::size_t>(j) * M + i] = mask.at(j, i) ? 1.0 : 0.0;
    return alpha;
  }

  // multi-source BFS from every masked-out pixel
  constexpr int kFar = std::numeric_limits<int>::max();
  std::vector<int> dist(static_cast<std::size_t>(N) * M, kFar);
  std::deque<std::pair<int, int>> queue;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < M; ++i)
      if (!mask.at(j, i)) {
        dist[static_cast<std::size_t>(j) * M + i] = 0;
        queue.emplace_back(j, i);
      }
  while (!queue.empty()) {
    auto [j, i] = queue.front();
    queue.pop_front();
    int d = dist[static_cast<std::size_t>(j) * M + i];
    const int dj[4] = {-1, 1, 0, 0};
    const int di[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      int nj = j + dj[k];
      int ni = (i + di[k] + M) % M;
      if (nj < 0 || nj >= N) continue;
      auto& nd = dist[static_cast<std::size_t>(nj) * M + ni];
      if (nd > d + 1) {
        nd = d + 1;
        queue.emplace_back(nj, ni);
      }
    }
  }
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < M; ++i) {
      std::size_t k = static_cast<std::size_t>(j) * M + i;
      if (!mask.at(j, i)) continue;
      alpha[k] = dist[k] >= feather
                     ? 1.0
                     : static_cast<double>(dist[k]) / feather;
    }
  return alpha;
}

/// output = alpha * masked_hr + (1 - alpha) * gen_up. Given-region pixels
/// past the feather band (alpha == 1) are copied bit-exactly.
inline ErpImage blend_refine(const ErpImage& gen_up, const ErpImage& masked_hr,
                             const MaskMap& mask_hr, int feather) {
  require_same_dims(gen_up, masked_hr, "blend_refine");
  require_same_dims(gen_up, mask_hr, "blend_refine");
  std::vector<double> alpha = blend_alpha(mask_hr, feather);

  ErpImage out(gen_up.height, gen_up.width);
  for (int j = 0; j < out.height; ++j)
    for (int i = 0; i < out.width; ++i) {
      double a = alpha[static_cast<std::size_t>(j) * out.width + i];
      for (int c = 0; c < 3; ++c) {
        if (a >= 1.0) {
          out.at(j, i, c) = masked_hr.at(j, i, c);
        } else {
          out.at(j, i, c) = static_cast<float>(
              a * masked_hr.at(j, i, c) + (1.0 - a) * gen_up.at(j, i, c));
        }
      }
    }
  return out;
}

struct RefineObjective {
  double rec = 0.0;   // mean squared RGB error
  double freq = 0.0;  // frequency consistency loss
  double total = 0.0;
};

/// rec + freq; the adversarial term has no trained discriminator here and
/// is excluded from the total.
inline RefineObjective refine_objective(const ErpImage& output,
                                        const ErpImage& target,
                                        const spectrum::Scorer& scorer) {
  require_same_dims(output, target, "refine_objective");
  double sq = 0.0;
  for (std::size_t k = 0; k < output.data.size(); ++k) {
    double d = static_cast<double>(output.data[k]) - target.data[k];
    sq += d * d;
  }
  RefineObjective obj;
  obj.rec = sq / static_cast<double>(output.data.size());
  obj.freq = spectrum::freq_consistency_loss(output, target, scorer);
  obj.total = obj.rec + obj.freq;
  return obj;
}

}  // namespace refine
}  // namespace panosphere
