#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "panosphere/harmonics.hpp"
#include "support/oracles.hpp"

using namespace panosphere;
using namespace panosphere::harmonics;
using panosphere::sphgeo::kPi;
using panosphere::sphgeo::kTwoPi;

TEST_CASE("associated Legendre base cases and closed forms", "[harmonics]") {
  CHECK(assoc_legendre(0, 0, -0.7) == 1.0);
  CHECK(assoc_legendre(0, 0, 0.9) == 1.0);
  CHECK(assoc_legendre(1, 0, 0.5) == Catch::Approx(0.5).epsilon(1e-15));
  // P_2^1(x) = -3 x sqrt(1 - x^2) with the Condon-Shortley phase
  CHECK(assoc_legendre(2, 1, 0.3) ==
        Catch::Approx(-3.0 * 0.3 * std::sqrt(1.0 - 0.09)).epsilon(1e-14));

  CHECK_THROWS_AS(assoc_legendre(1, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(assoc_legendre(2, -1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(assoc_legendre(2, 1, 1.5), std::invalid_argument);
}

TEST_CASE("rsh_norm matches direct evaluation", "[harmonics]") {
  CHECK(rsh_norm(0, 0) == Catch::Approx(std::sqrt(1.0 / kTwoPi)).epsilon(1e-15));
  CHECK(rsh_norm(1, 0) == Catch::Approx(std::sqrt(3.0 / kTwoPi)).epsilon(1e-15));
  CHECK(rsh_norm(1, 1) ==
        Catch::Approx(std::sqrt(3.0 / (4.0 * kPi))).epsilon(1e-15));
  CHECK_THROWS_AS(rsh_norm(1, 2), std::invalid_argument);
  CHECK_THROWS_AS(rsh_norm(3, -1), std::invalid_argument);
}

TEST_CASE("rsh matches closed-form polynomials for l <= 3", "[harmonics]") {
  CHECK(rsh(0, 0, {1.0, 2.0}) ==
        Catch::Approx(1.0 / (2.0 * std::sqrt(kPi))).epsilon(1e-14));
  CHECK(rsh(1, 0, {0.0, 0.0}) ==
        Catch::Approx(std::sqrt(3.0 / (4.0 * kPi))).epsilon(1e-14));
  for (int m = 1; m <= 3; ++m) CHECK(rsh(3, -m, {0.7, 0.0}) == 0.0);

  std::mt19937_64 eng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    double theta = kPi * rng::uniform01(eng);
    double phi = kTwoPi * rng::uniform01(eng);
    for (int l = 0; l <= 3; ++l)
      for (int m = -l; m <= l; ++m) {
        double got = rsh(l, m, {theta, phi});
        double want = oracles::rsh_closed(l, m, theta, phi);
        REQUIRE(std::fabs(got - want) < 1e-12);
      }
  }
  CHECK_THROWS_AS(rsh(1, 2, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("rsh pole behaviour", "[harmonics]") {
  for (double theta : {0.0, kPi})
    for (int l = 1; l <= 3; ++l)
      for (int m = 1; m <= l; ++m)
        for (double phi : {0.0, 1.0, 4.0}) {
          CHECK(std::fabs(rsh(l, m, {theta, phi})) < 1e-14);
          CHECK(std::fabs(rsh(l, -m, {theta, phi})) < 1e-14);
        }
  // m = 0 channels are independent of phi everywhere
  for (int l = 0; l <= 3; ++l)
    CHECK(rsh(l, 0, {0.3, 0.1}) == rsh(l, 0, {0.3, 5.9}));
}

TEST_CASE("rsh bounded by norm times Legendre peak", "[harmonics]") {
  std::mt19937_64 eng(13);
  for (int l = 0; l <= 3; ++l)
    for (int m = 0; m <= l; ++m) {
      double peak = 0.0;
      for (int s = 0; s <= 2000; ++s)
        peak = std::max(peak,
                        std::fabs(assoc_legendre(l, m, -1.0 + 2.0 * s / 2000.0)));
      double bound = rsh_norm(l, m) * peak + 1e-9;
      for (int trial = 0; trial < 200; ++trial) {
        double theta = kPi * rng::uniform01(eng);
        double phi = kTwoPi * rng::uniform01(eng);
        REQUIRE(std::fabs(rsh(l, m, {theta, phi})) <= bound);
        REQUIRE(std::fabs(rsh(l, -m, {theta, phi})) <= bound);
      }
    }
}

TEST_CASE("sh_map channel count, D=0 value, determinism", "[harmonics]") {
  auto map = sh_map(32, 64, 3);
  CHECK(map.channels == 16);

  auto flat = sh_map(16, 32, 0);
  for (float v : flat.data)
    CHECK(v == Catch::Approx(1.0 / (2.0 * std::sqrt(kPi))).epsilon(1e-6));

  auto again = sh_map(32, 64, 3);
  CHECK(map.data == again.data);

  CHECK_THROWS_AS(sh_map(32, 32, 3), std::invalid_argument);
  CHECK_THROWS_AS(sh_map(32, 64, -1), std::invalid_argument);
  CHECK_THROWS_AS(sh_map(32, 64, 13), std::invalid_argument);
}

TEST_CASE("sh_map agrees with rsh at sampled pixels", "[harmonics]") {
  int N = 16, M = 32, D = 3;
  auto map = sh_map(N, M, D);
  for (int j : {0, 7, 15})
    for (int i : {0, 11, 31})
      for (int l = 0; l <= D; ++l)
        for (int m = -l; m <= l; ++m) {
          double want = rsh(l, m, sphgeo::erp_to_sphere(i, j, M, N));
          REQUIRE(map.at(j, i, sh_channel_index(l, m)) ==
                  Catch::Approx(want).margin(1e-6));
        }
}

TEST_CASE("sh_map channels are orthonormal under sin-theta quadrature",
          "[harmonics]") {
  int N = 64, M = 128, D = 3;
  auto map = sh_map(N, M, D);
  int C = map.channels;
  std::vector<double> gram(static_cast<std::size_t>(C) * C, 0.0);
  for (int j = 0; j < N; ++j) {
    double wq = std::sin(kPi * (j + 0.5) / N) * (kPi / N) * (kTwoPi / M);
    for (int i = 0; i < M; ++i) {
      const float* px = &map.data[(static_cast<std::size_t>(j) * M + i) * C];
      for (int a = 0; a < C; ++a)
        for (int b = a; b < C; ++b)
          gram[static_cast<std::size_t>(a) * C + b] +=
              wq * static_cast<double>(px[a]) * px[b];
    }
  }
  for (int a = 0; a < C; ++a)
    for (int b = a; b < C; ++b) {
      double want = a == b ? 1.0 : 0.0;
      REQUIRE(gram[static_cast<std::size_t>(a) * C + b] ==
              Catch::Approx(want).margin(1e-2));
    }
}

TEST_CASE("SHMP file round trip and error handling", "[harmonics]") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "panosphere_shmp_test";
  fs::create_directories(dir);
  auto path = (dir / "map.shmp").string();

  auto map = sh_map(8, 16, 2);
  shmap_save(path, map);

  // 16-byte header: magic + three u32 fields
  std::ifstream is(path, std::ios::binary);
  char head[16];
  is.read(head, 16);
  REQUIRE(std::string(head, 4) == "SHMP");
  is.close();
  CHECK(fs::file_size(path) == 16 + map.data.size() * 4);

  auto loaded = shmap_load(path);
  CHECK(loaded.height == map.height);
  CHECK(loaded.width == map.width);
  CHECK(loaded.channels == map.channels);
  CHECK(loaded.data == map.data);

  auto bad = (dir / "bad.shmp").string();
  std::ofstream os(bad, std::ios::binary);
  os << "NOPE";
  os.close();
  CHECK_THROWS_AS(shmap_load(bad), data_error);
  CHECK_THROWS_AS(shmap_load((dir / "missing.shmp").string()), io_error);
  fs::remove_all(dir);
}
