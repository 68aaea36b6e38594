#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "panosphere/spectrum.hpp"
#include "support/oracles.hpp"

using namespace panosphere;
using namespace panosphere::spectrum;
using panosphere::sphgeo::kPi;
using panosphere::sphgeo::kTwoPi;

namespace {

std::vector<double> random_plane(int h, int w, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::vector<double> p(static_cast<std::size_t>(h) * w);
  for (auto& v : p) v = rng::uniform01(eng) * 2.0 - 1.0;
  return p;
}

double rel_err(const Spectrum& got, const std::vector<std::complex<double>>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < want.size(); ++k) {
    double dr = got.re[k] - want[k].real();
    double di = got.im[k] - want[k].imag();
    num += dr * dr + di * di;
    den += std::norm(want[k]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

TEST_CASE("dft2 DC-only and single-cosine inputs", "[spectrum]") {
  std::vector<double> flat(64, 3.0);
  auto spec = dft2(flat, 8, 8);
  CHECK(spec.re[0] == Catch::Approx(192.0).epsilon(1e-12));
  CHECK(std::fabs(spec.im[0]) < 1e-12);
  for (std::size_t k = 1; k < 64; ++k) {
    REQUIRE(std::fabs(spec.re[k]) < 1e-12);
    REQUIRE(std::fabs(spec.im[k]) < 1e-12);
  }

  // p(x,y) = cos(2*pi*x/h): energy only in row-frequency bins 1 and h-1
  int h = 8, w = 4;
  std::vector<double> wave(static_cast<std::size_t>(h) * w);
  for (int x = 0; x < h; ++x)
    for (int y = 0; y < w; ++y)
      wave[static_cast<std::size_t>(x) * w + y] = std::cos(kTwoPi * x / h);
  auto ws = dft2(wave, h, w);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      double amp = std::hypot(ws.re[ws.idx(u, v)], ws.im[ws.idx(u, v)]);
      if ((u == 1 || u == h - 1) && v == 0)
        REQUIRE(amp == Catch::Approx(h * w / 2.0).epsilon(1e-12));
      else
        REQUIRE(amp < 1e-9);
    }

  CHECK_THROWS_AS(dft2({}, 0, 0), std::invalid_argument);
}

TEST_CASE("dft2 matches the naive double sum", "[spectrum]") {
  auto p = random_plane(8, 8, 101);
  auto want = oracles::naive_dft2(p, 8, 8);
  CHECK(rel_err(dft2(p, 8, 8), want) < 1e-9);

  // every size in 1..12 x 1..12 (full 16 sweep lives in the acceptance run)
  for (int h = 1; h <= 12; ++h)
    for (int w = 1; w <= 12; ++w) {
      auto q = random_plane(h, w, 7000 + h * 16 + w);
      REQUIRE(rel_err(dft2(q, h, w), oracles::naive_dft2(q, h, w)) < 1e-9);
    }
}

TEST_CASE("dft2 linearity and conjugate symmetry", "[spectrum]") {
  int h = 12, w = 10;
  auto p = random_plane(h, w, 5);
  auto q = random_plane(h, w, 6);
  double a = 1.7, b = -0.4;
  std::vector<double> mix(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) mix[k] = a * p[k] + b * q[k];
  auto sp = dft2(p, h, w);
  auto sq = dft2(q, h, w);
  auto sm = dft2(mix, h, w);
  for (std::size_t k = 0; k < p.size(); ++k) {
    REQUIRE(sm.re[k] == Catch::Approx(a * sp.re[k] + b * sq.re[k]).margin(1e-9));
    REQUIRE(sm.im[k] == Catch::Approx(a * sp.im[k] + b * sq.im[k]).margin(1e-9));
  }
  // real input: F(u,v) = conj(F((h-u) mod h, (w-v) mod w))
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      std::size_t k = sp.idx(u, v);
      std::size_t r = sp.idx((h - u) % h, (w - v) % w);
      REQUIRE(sp.re[k] == Catch::Approx(sp.re[r]).margin(1e-9));
      REQUIRE(sp.im[k] == Catch::Approx(-sp.im[r]).margin(1e-9));
    }
}

TEST_CASE("Parseval over random images", "[spectrum]") {
  for (int trial = 0; trial < 50; ++trial) {
    int h = 5 + trial % 11;
    int w = 3 + trial % 13;
    auto p = random_plane(h, w, 900 + trial);
    auto spec = dft2(p, h, w);
    double freq = 0.0, spatial = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      freq += spec.re[k] * spec.re[k] + spec.im[k] * spec.im[k];
      spatial += p[k] * p[k];
    }
    REQUIRE(freq == Catch::Approx(static_cast<double>(h) * w * spatial)
                        .epsilon(1e-9));
  }
}

TEST_CASE("amp_phase decomposition", "[spectrum]") {
  Spectrum spec;
  spec.h = 1;
  spec.w = 2;
  spec.re = {3.0, 0.0};
  spec.im = {4.0, 0.0};
  auto ap = amp_phase(spec);
  CHECK(ap.amp[0] == Catch::Approx(5.0).epsilon(1e-15));
  CHECK(ap.phase[0] == Catch::Approx(0.9272952180016122).epsilon(1e-12));
  CHECK(ap.amp[1] == 0.0);
  CHECK(ap.phase[1] == 0.0);

  // Parseval through the amplitude view
  auto p = random_plane(6, 9, 77);
  auto full = amp_phase(dft2(p, 6, 9));
  double freq = 0.0, spatial = 0.0;
  for (double v : full.amp) freq += v * v;
  for (double v : p) spatial += v * v;
  CHECK(freq == Catch::Approx(54.0 * spatial).epsilon(1e-9));
}

TEST_CASE("center_shift moves DC to the middle", "[spectrum]") {
  auto p = random_plane(8, 6, 13);
  auto spec = dft2(p, 8, 6);
  auto shifted = center_shift(spec);
  CHECK(shifted.layout == Layout::centered);
  CHECK(shifted.re[shifted.idx(4, 3)] == spec.re[0]);
  CHECK(shifted.im[shifted.idx(4, 3)] == spec.im[0]);

  // involution for even dims
  Spectrum relabeled = shifted;
  relabeled.layout = Layout::natural;
  auto twice = center_shift(relabeled);
  CHECK(twice.re == spec.re);
  CHECK(twice.im == spec.im);

  // odd 3x3 case against the modular index map
  auto q = random_plane(3, 3, 14);
  auto sq = dft2(q, 3, 3);
  auto sh = center_shift(sq);
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v) {
      REQUIRE(sh.re[sh.idx((u + 1) % 3, (v + 1) % 3)] == sq.re[sq.idx(u, v)]);
      REQUIRE(sh.im[sh.idx((u + 1) % 3, (v + 1) % 3)] == sq.im[sq.idx(u, v)]);
    }

  CHECK_THROWS_AS(center_shift(shifted), std::logic_error);
}

namespace {

ErpImage box_blur(const ErpImage& img) {
  ErpImage out(img.height, img.width);
  for (int j = 0; j < img.height; ++j)
    for (int i = 0; i < img.width; ++i)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            int nj = std::clamp(j + dj, 0, img.height - 1);
            int ni = (i + di + img.width) % img.width;
            acc += img.at(nj, ni, c);
          }
        out.at(j, i, c) = static_cast<float>(acc / 9.0);
      }
  return out;
}

}  // namespace

TEST_CASE("freq_gap ratios and high-frequency mass", "[spectrum]") {
  auto img = oracles::random_image(16, 32, 19);
  auto same = freq_gap(img, img, 8);
  CHECK(same.hf_mass_a == Catch::Approx(same.hf_mass_b).epsilon(1e-12));
  for (int b = 0; b < same.bins; ++b) {
    if (std::isnan(same.ratio[b])) continue;
    REQUIRE(same.ratio[b] == Catch::Approx(1.0).epsilon(1e-12));
  }

  // blurring drains high-frequency mass, repeatedly
  auto blur1 = box_blur(img);
  auto blur2 = box_blur(blur1);
  auto blur3 = box_blur(blur2);
  double m0 = freq_gap(img, img).hf_mass_a;
  double m1 = freq_gap(blur1, img).hf_mass_a;
  double m2 = freq_gap(blur2, img).hf_mass_a;
  double m3 = freq_gap(blur3, img).hf_mass_a;
  CHECK(m1 < m0);
  CHECK(m2 <= m1);
  CHECK(m3 <= m2);

  // white noise versus a constant image
  ErpImage flat(16, 32, 0.5f);
  auto gap = freq_gap(img, flat, 8);
  CHECK(gap.hf_mass_b == 0.0);
  CHECK(gap.hf_mass_a > 0.05);

  ErpImage other(8, 16);
  CHECK_THROWS_AS(freq_gap(img, other, 8), std::invalid_argument);
  CHECK_THROWS_AS(freq_gap(img, img, 1), std::invalid_argument);
}

TEST_CASE("freq_consistency_loss with a constant scorer", "[spectrum]") {
  auto a = oracles::random_image(8, 8, 23);
  auto b = oracles::random_image(8, 8, 24);
  ConstantScorer half(0.5);
  CHECK(freq_consistency_loss(a, b, half) ==
        Catch::Approx(-2.0 * std::log(2.0)).epsilon(1e-12));

  // identical arguments keep the two-sided form symmetric by construction
  PatchLogisticScorer logistic;
  int warnings = 0;
  double self = freq_consistency_loss(a, a, logistic, &warnings);
  CHECK(warnings == 0);
  auto ap = amp_phase(dft2_luma(a));
  for (auto& v : ap.amp) v = std::log1p(v);
  double da = logistic.score(ap.amp, 8, 8);
  double dp = logistic.score(ap.phase, 8, 8);
  CHECK(self == Catch::Approx(0.5 * (std::log(da) + std::log(1 - da)) +
                              0.5 * (std::log(dp) + std::log(1 - dp)))
                    .epsilon(1e-12));
}

TEST_CASE("scorer outputs outside (0,1) are clamped and counted", "[spectrum]") {
  auto a = oracles::random_image(8, 8, 25);
  auto b = oracles::random_image(8, 8, 26);
  ConstantScorer degenerate(1.0);
  int warnings = 0;
  double loss = freq_consistency_loss(a, b, degenerate, &warnings);
  CHECK(warnings == 4);
  CHECK(loss == Catch::Approx(std::log(1.0 - 1e-7) + std::log(1e-7)).epsilon(1e-9));
}

TEST_CASE("amplitude visualization stays in range", "[spectrum]") {
  auto img = oracles::random_image(8, 16, 27);
  auto view = amp_to_image(amp_phase(center_shift(dft2_luma(img))));
  CHECK(view.height == 8);
  CHECK(view.width == 16);
  for (float v : view.data) {
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 1.0f);
  }
}
