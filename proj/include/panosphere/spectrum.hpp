#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "panosphere/image.hpp"
#include "panosphere/sphgeo.hpp"

namespace panosphere {
namespace spectrum {

enum class Layout { natural, centered };

/// Complex 2D frequency plane; u indexes rows, v columns, matching
/// F(u,v) = sum_x sum_y p(x,y) exp(-j*2*pi*(ux/h + vy/w)).
struct Spectrum {
  int h = 0, w = 0;
  std::vector<double> re, im;
  Layout layout = Layout::natural;

  std::size_t idx(int u, int v) const {
    return static_cast<std::size_t>(u) * w + v;
  }
};

namespace detail {

using cplx = std::complex<double>;

inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
  std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = (inverse ? 2.0 : -2.0) * sphgeo::kPi / static_cast<double>(len);
    cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = a[i + k];
        cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

/// Forward DFT of arbitrary length: radix-2 when n is a power of two,
/// otherwise Bluestein's chirp-z through a padded power-of-two convolution.
inline void fft_any(std::vector<cplx>& a) {
  std::size_t n = a.size();
  if (n <= 1) return;
  if ((n & (n - 1)) == 0) {
    fft_pow2(a, false);
    return;
  }
  std::size_t L = 1;
  while (L < 2 * n - 1) L <<= 1;

  // chirp with the quadratic exponent reduced mod 2n to keep angles small
  std::vector<cplx> chirp(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::uint64_t m2 = (static_cast<std::uint64_t>(m) * m) % (2 * n);
    double ang = -sphgeo::kPi * static_cast<double>(m2) / static_cast<double>(n);
    chirp[m] = cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<cplx> A(L, cplx(0.0, 0.0)), B(L, cplx(0.0, 0.0));
  for (std::size_t m = 0; m < n; ++m) A[m] = a[m] * chirp[m];
  B[0] = std::conj(chirp[0]);
  for (std::size_t m = 1; m < n; ++m) B[m] = B[L - m] = std::conj(chirp[m]);
  fft_pow2(A, false);
  fft_pow2(B, false);
  for (std::size_t i = 0; i < L; ++i) A[i] *= B[i];
  fft_pow2(A, true);
  for (std::size_t m = 0; m < n; ++m) a[m] = A[m] * chirp[m];
}

}  // namespace detail

/// 2D DFT of one channel (h rows by w columns, row-major), separable FFT
/// over rows then columns. No normalization on the forward transform.
inline Spectrum dft2(const std::vector<double>& pixels, int h, int w) {
  if (h < 1 || w < 1 || pixels.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("dft2: empty or mismatched input");

  std::vector<detail::cplx> plane(pixels.size());
  for (std::size_t k = 0; k < pixels.size(); ++k)
    plane[k] = detail::cplx(pixels[k], 0.0);

  std::vector<detail::cplx> line(std::max(h, w));
  for (int x = 0; x < h; ++x) {
    line.assign(plane.begin() + static_cast<std::size_t>(x) * w,
                plane.begin() + static_cast<std::size_t>(x + 1) * w);
    detail::fft_any(line);
    std::copy(line.begin(), line.end(),
              plane.begin() + static_cast<std::size_t>(x) * w);
  }
  for (int y = 0; y < w; ++y) {
    line.resize(h);
    for (int x = 0; x < h; ++x) line[x] = plane[static_cast<std::size_t>(x) * w + y];
    detail::fft_any(line);
    for (int x = 0; x < h; ++x) plane[static_cast<std::size_t>(x) * w + y] = line[x];
  }

  Spectrum spec;
  spec.h = h;
  spec.w = w;
  spec.re.resize(pixels.size());
  spec.im.resize(pixels.size());
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    spec.re[k] = plane[k].real();
    spec.im[k] = plane[k].imag();
  }
  return spec;
}

/// Mean-of-RGB plane of an image, the channel used by the frequency ops.
inline std::vector<double> luma_plane(const ErpImage& img) {
  std::vector<double> plane(img.pixel_count());
  for (int j = 0; j < img.height; ++j)
    for (int i = 0; i < img.width; ++i)
      plane[static_cast<std::size_t>(j) * img.width + i] = img.luma(j, i);
  return plane;
}

inline Spectrum dft2_luma(const ErpImage& img) {
  return dft2(luma_plane(img), img.height, img.width);
}

struct AmpPhase {
  int h = 0, w = 0;
  std::vector<double> amp;    // sqrt(R^2 + I^2)
  std::vector<double> phase;  // atan2(I, R), 0 by convention at (0,0) bins
};

inline AmpPhase amp_phase(const Spectrum& spec) {
  AmpPhase out;
  out.h = spec.h;
  out.w = spec.w;
  out.amp.resize(spec.re.size());
  out.phase.resize(spec.re.size());
  for (std::size_t k = 0; k < spec.re.size(); ++k) {
    double r = spec.re[k], i = spec.im[k];
    out.amp[k] = std::hypot(r, i);
    out.phase[k] = (r == 0.0 && i == 0.0) ? 0.0 : std::atan2(i, r);
  }
  return out;
}

/// Quadrant swap moving the DC bin to (h/2, w/2); involutive for even
/// dimensions. Rejects input that is already centered.
inline Spectrum center_shift(const Spectrum& spec) {
  if (spec.layout == Layout::centered)
    throw std::logic_error("center_shift: spectrum is already centered");
  Spectrum out;
  out.h = spec.h;
  out.w = spec.w;
  out.layout = Layout::centered;
  out.re.resize(spec.re.size());
  out.im.resize(spec.im.size());
  for (int u = 0; u < spec.h; ++u) {
    int du = (u + spec.h / 2) % spec.h;
    for (int v = 0; v < spec.w; ++v) {
      int dv = (v + spec.w / 2) % spec.w;
      out.re[out.idx(du, dv)] = spec.re[spec.idx(u, v)];
      out.im[out.idx(du, dv)] = spec.im[spec.idx(u, v)];
    }
  }
  return out;
}

/// Radial comparison of two centered amplitude spectra plus the fraction
/// of spectral energy beyond pixel radius w/4 for each image.
struct FreqGapReport {
  int bins = 0;
  std::vector<double> radius_lo, radius_hi;  // normalized bin edges
  std::vector<double> amp_a, amp_b;          // per-bin mean amplitude
  std::vector<double> ratio;                 // amp_a / amp_b, NaN if empty b
  double hf_mass_a = 0.0, hf_mass_b = 0.0;
};

inline FreqGapReport freq_gap(const ErpImage& img_a, const ErpImage& img_b,
                              int B = 32) {
  require_same_dims(img_a, img_b, "freq_gap");
  if (B < 2) throw std::invalid_argument("freq_gap: need at least 2 bins");

  Spectrum sa = center_shift(dft2_luma(img_a));
  Spectrum sb = center_shift(dft2_luma(img_b));
  AmpPhase apa = amp_phase(sa);
  AmpPhase apb = amp_phase(sb);

  int h = sa.h, w = sa.w;
  int cu = h / 2, cv = w / 2;
  double r_max = 0.0;
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      double du = u - cu, dv = v - cv;
      r_max = std::max(r_max, std::sqrt(du * du + dv * dv));
    }

  FreqGapReport report;
  report.bins = B;
  report.radius_lo.resize(B);
  report.radius_hi.resize(B);
  report.amp_a.assign(B, 0.0);
  report.amp_b.assign(B, 0.0);
  report.ratio.assign(B, std::nan(""));
  for (int b = 0; b < B; ++b) {
    report.radius_lo[b] = static_cast<double>(b) / B;
    report.radius_hi[b] = static_cast<double>(b + 1) / B;
  }

  std::vector<std::size_t> counts(B, 0);
  double hf_a = 0.0, hf_b = 0.0, tot_a = 0.0, tot_b = 0.0;
  double hf_radius = w / 4.0;
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      double du = u - cu, dv = v - cv;
      double r = std::sqrt(du * du + dv * dv);
      int b = r_max > 0.0 ? std::min(B - 1, static_cast<int>(r / r_max * B)) : 0;
      std::size_t k = static_cast<std::size_t>(u) * w + v;
      report.amp_a[b] += apa.amp[k];
      report.amp_b[b] += apb.amp[k];
      ++counts[b];
      double ea = apa.amp[k] * apa.amp[k];
      double eb = apb.amp[k] * apb.amp[k];
      tot_a += ea;
      tot_b += eb;
      if (r > hf_radius) {
        hf_a += ea;
        hf_b += eb;
      }
    }
  for (int b = 0; b < B; ++b) {
    if (counts[b] == 0) continue;
    report.amp_a[b] /= static_cast<double>(counts[b]);
    report.amp_b[b] /= static_cast<double>(counts[b]);
    if (report.amp_b[b] > 0.0) report.ratio[b] = report.amp_a[b] / report.amp_b[b];
  }
  report.hf_mass_a = tot_a > 0.0 ? hf_a / tot_a : 0.0;
  report.hf_mass_b = tot_b > 0.0 ? hf_b / tot_b : 0.0;
  return report;
}

inline void freq_gap_save_csv(const std::string& path,
                              const FreqGapReport& report) {
  std::ofstream os(path);
  if (!os) throw io_error("freq_gap_save_csv: cannot open " + path);
  os << "bin_index,radius_lo,radius_hi,amp_a,amp_b,ratio\n";
  char buf[256];
  for (int b = 0; b < report.bins; ++b) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", b,
                  report.radius_lo[b], report.radius_hi[b], report.amp_a[b],
                  report.amp_b[b], report.ratio[b]);
    os << buf;
  }
  if (!os) throw io_error("freq_gap_save_csv: write failed for " + path);
}

inline void freq_gap_save_summary(const std::string& path,
                                  const FreqGapReport& report) {
  nlohmann::json j;
  j["hf_mass_a"] = report.hf_mass_a;
  j["hf_mass_b"] = report.hf_mass_b;
  std::ofstream os(path);
  if (!os) throw io_error("freq_gap_save_summary: cannot open " + path);
  os << j.dump(1) << '\n';
}

/// Deterministic map from a frequency-plane view (amplitude or phase) to a
/// score in (0,1), standing in for the patch discriminator.
struct Scorer {
  virtual ~Scorer() = default;
  virtual double score(const std::vector<double>& map, int h, int w) const = 0;
};

struct ConstantScorer final : Scorer {
  double value = 0.5;
  explicit ConstantScorer(double v = 0.5) : value(v) {}
  double score(const std::vector<double>&, int, int) const override {
    return value;
  }
};

/// Mean logistic response over fixed tiles of the map.
struct PatchLogisticScorer final : Scorer {
  double weight = 4.0;
  double bias = -1.0;
  int patch = 8;

  double score(const std::vector<double>& map, int h, int w) const override {
    double acc = 0.0;
    std::size_t tiles = 0;
    for (int u0 = 0; u0 < h; u0 += patch)
      for (int v0 = 0; v0 < w; v0 += patch) {
        double sum = 0.0;
        std::size_t n = 0;
        for (int u = u0; u < std::min(h, u0 + patch); ++u)
          for (int v = v0; v < std::min(w, v0 + patch); ++v) {
            sum += map[static_cast<std::size_t>(u) * w + v];
            ++n;
          }
        double mean = sum / static_cast<double>(n);
        acc += 1.0 / (1.0 + std::exp(-(weight * mean + bias)));
        ++tiles;
      }
    return acc / static_cast<double>(tiles);
  }
};

/// L(x,y) = log D(y) + log(1 - D(x)) on amplitude and phase maps:
/// L_con = 1/2 L(|F^R|, |F^C|) + 1/2 L(angle F^R, angle F^C), computed on
/// the luma channel. Amplitude maps are log1p-compressed before scoring;
/// scores outside (0,1) are clamped to [1e-7, 1-1e-7] and counted.
inline double freq_consistency_loss(const ErpImage& refined,
                                    const ErpImage& target,
                                    const Scorer& scorer,
                                    int* clamp_warnings = nullptr) {
  require_same_dims(refined, target, "freq_consistency_loss");

  AmpPhase fr = amp_phase(dft2_luma(refined));
  AmpPhase ft = amp_phase(dft2_luma(target));
  for (auto& v : fr.amp) v = std::log1p(v);
  for (auto& v : ft.amp) v = std::log1p(v);

  auto clamped = [&](const std::vector<double>& map, int h, int w) {
    double d = scorer.score(map, h, w);
    if (!(d > 1e-7) || !(d < 1.0 - 1e-7)) {
      if (clamp_warnings) ++*clamp_warnings;
      d = std::min(1.0 - 1e-7, std::max(1e-7, d));
    }
    return d;
  };
  int h = refined.height, w = refined.width;
  double amp_term = std::log(clamped(ft.amp, h, w)) +
                    std::log(1.0 - clamped(fr.amp, h, w));
  double phase_term = std::log(clamped(ft.phase, h, w)) +
                      std::log(1.0 - clamped(fr.phase, h, w));
  return 0.5 * amp_term + 0.5 * phase_term;
}

/// Fig. 7-style visualization: log-scaled centered amplitude as grayscale.
inline ErpImage amp_to_image(const AmpPhase& ap) {
  ErpImage img(ap.h, ap.w);
  double peak = 0.0;
  for (double v : ap.amp) peak = std::max(peak, std::log1p(v));
  for (int u = 0; u < ap.h; ++u)
    for (int v = 0; v < ap.w; ++v) {
      double g = peak > 0.0
                     ? std::log1p(ap.amp[static_cast<std::size_t>(u) * ap.w + v]) / peak
                     : 0.0;
      for (int c = 0; c < 3; ++c) img.at(u, v, c) = static_cast<float>(g);
    }
  return img;
}

}  // namespace spectrum
}  // namespace panosphere
