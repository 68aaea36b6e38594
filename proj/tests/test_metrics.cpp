#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "panosphere/metrics.hpp"
#include "panosphere/sphgeo.hpp"
#include "support/oracles.hpp"

using namespace panosphere;
using namespace panosphere::metrics;
using panosphere::sphgeo::kPi;

TEST_CASE("weight map matches the cosine formula row by row", "[metrics]") {
  // oracle route: cos((j+0.5-N/2)pi/N) == sin(pi*(j+0.5)/N) shifted identity
  auto map = ws_weight_map(512, 1024);
  CHECK(map.row_weight[0] == Catch::Approx(std::sin(kPi / 1024.0)).epsilon(1e-12));
  CHECK(map.row_weight[256] ==
        Catch::Approx(std::cos(0.5 * kPi / 512.0)).epsilon(1e-12));

  for (int N : {4, 64, 512}) {
    auto wm = ws_weight_map(N, 2 * N);
    for (int j = 0; j < N; ++j) {
      double via_sin = std::sin(kPi * (j + 0.5) / N);
      REQUIRE(std::fabs(wm.row_weight[j] - via_sin) < 1e-12);
      REQUIRE(wm.row_weight[j] > 0.0);
      REQUIRE(wm.row_weight[j] <= 1.0);
      // mirror symmetry about the horizontal midline
      REQUIRE(std::fabs(wm.row_weight[j] - wm.row_weight[N - 1 - j]) < 1e-12);
    }
    // maximum on the two center rows, minimum on the outermost rows
    double peak = *std::max_element(wm.row_weight.begin(), wm.row_weight.end());
    CHECK(wm.row_weight[N / 2] == peak);
    CHECK(wm.row_weight[N / 2 - 1] == peak);
    double low = *std::min_element(wm.row_weight.begin(), wm.row_weight.end());
    CHECK(wm.row_weight[0] == low);
    CHECK(wm.row_weight[N - 1] == low);
  }
  CHECK_THROWS_AS(ws_weight_map(16, 16), std::invalid_argument);
}

TEST_CASE("ws_psnr basics", "[metrics]") {
  auto a = oracles::random_image(32, 64, 3);
  CHECK(ws_psnr(a, a) == 99.0);

  ErpImage base(32, 64, 0.25f);
  ErpImage offset(32, 64, 0.35f);
  CHECK(std::fabs(ws_psnr(base, offset) - 20.0) < 1e-6);

  auto b = oracles::random_image(32, 64, 4);
  CHECK(ws_psnr(a, b) == Catch::Approx(ws_psnr(b, a)).epsilon(1e-15));

  ErpImage small(16, 32);
  CHECK_THROWS_AS(ws_psnr(a, small), std::invalid_argument);
  ErpImage square(32, 32, 0.0f);
  CHECK_THROWS_AS(ws_psnr(square, square), std::invalid_argument);
}

TEST_CASE("polar error hurts less than equatorial error", "[metrics]") {
  int N = 64, M = 128;
  ErpImage ref(N, M, 0.5f);
  ErpImage polar = ref, equator = ref;
  for (int i = 0; i < M; ++i) {
    polar.at(0, i, 0) += 0.2f;
    equator.at(N / 2, i, 0) += 0.2f;
  }
  CHECK(ws_psnr(ref, polar) > ws_psnr(ref, equator));
  // unweighted PSNR cannot tell the two apart
  CHECK(psnr(ref, polar) == Catch::Approx(psnr(ref, equator)).epsilon(1e-12));
}

TEST_CASE("ws_psnr equals psnr for row-constant error magnitude", "[metrics]") {
  int N = 32, M = 64;
  // dyadic pixel values keep the per-column offsets exactly representable,
  // so the error really is identical down every row
  std::mt19937_64 eng(5);
  ErpImage a(N, M);
  for (auto& v : a.data) v = static_cast<float>(eng() % 128) / 256.0f;
  ErpImage c = a;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < M; ++i)
      for (int ch = 0; ch < 3; ++ch)
        c.at(j, i, ch) = a.at(j, i, ch) + (i % 5) / 512.0f + ch / 1024.0f;
  CHECK(ws_psnr(a, c) == Catch::Approx(psnr(a, c)).epsilon(1e-12));
}

TEST_CASE("ws_psnr is yaw invariant", "[metrics]") {
  auto a = oracles::random_image(32, 64, 6);
  auto b = oracles::random_image(32, 64, 7);
  double ref = ws_psnr(a, b);
  for (int shift : {1, 9, 33}) {
    double rot = ws_psnr(sphgeo::rotate_yaw(a, shift), sphgeo::rotate_yaw(b, shift));
    CHECK(rot == Catch::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("psnr examples and the 255-peak option", "[metrics]") {
  ErpImage a(16, 32, 0.25f);
  CHECK(psnr(a, a) == 99.0);
  ErpImage b(16, 32, 0.35f);
  CHECK(std::fabs(psnr(a, b) - 20.0) < 1e-6);

  auto x = oracles::random_image(16, 32, 8);
  auto y = oracles::random_image(16, 32, 9);
  // naive MSE oracle
  double sq = 0.0;
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    double d = static_cast<double>(x.data[k]) - y.data[k];
    sq += d * d;
  }
  double want = 10.0 * std::log10(1.0 / (sq / x.data.size()));
  CHECK(psnr(x, y) == Catch::Approx(want).epsilon(1e-12));

  // peak parameter shifts by 20*log10(peak)
  CHECK(psnr(x, y, 255.0) ==
        Catch::Approx(want + 20.0 * std::log10(255.0)).epsilon(1e-12));
  CHECK(ws_psnr(x, y, 255.0) ==
        Catch::Approx(ws_psnr(x, y) + 20.0 * std::log10(255.0)).epsilon(1e-12));
}

TEST_CASE("metric CSV appends rows with a single header", "[metrics]") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "panosphere_metrics_csv";
  fs::create_directories(dir);
  auto path = (dir / "metrics.csv").string();
  fs::remove(path);

  append_metric_csv(path, "run1", "img0", "ws_psnr", 13.72);
  append_metric_csv(path, "run1", "img0", "psnr", 19.42);

  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "run_id,image_id,metric,value");
  std::getline(is, line);
  CHECK(line.rfind("run1,img0,ws_psnr,13.72", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("run1,img0,psnr,", 0) == 0);
  CHECK(!std::getline(is, line));
  fs::remove_all(dir);
}
