#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "panosphere/pipeline.hpp"
#include "support/oracles.hpp"

using namespace panosphere;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string((std::istreambuf_iterator<char>(is)), {});
}

std::map<std::string, std::string> dir_snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), root).string()] = read_bytes(entry.path());
  return files;
}

pipeline::RunConfig tiny_config(const std::string& out_dir) {
  pipeline::RunConfig cfg;
  cfg.seed = 7;
  cfg.N = 64;
  cfg.M = 128;
  cfg.f = 8;
  cfg.K = 24;
  cfg.D = 2;
  cfg.n = 3;
  cfg.alpha = 0.1;
  cfg.pad_w = 1;
  cfg.temperature = 0.8;
  cfg.feather = 4;
  cfg.n_samples = 3;
  cfg.kmeans_iters = 3;
  cfg.corpus_count = 8;
  cfg.out_dir = out_dir;
  return cfg;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(PANOSPHERE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("synthetic corpus is deterministic with real content", "[cli]") {
  auto a = synth::synth_corpus(64, 128, 4, 11);
  auto b = synth::synth_corpus(64, 128, 4, 11);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].data == b[i].data);
    CHECK(a[i].width == 2 * a[i].height);
    for (float v : a[i].data) {
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
    }
  }
  // different seeds change the content
  auto c = synth::synth_image(64, 128, 12);
  CHECK(a[0].data != c.data);

  // spectra carry real high-frequency mass, unlike a constant image
  ErpImage flat(64, 128, 0.5f);
  auto gap = spectrum::freq_gap(a[0], flat);
  CHECK(gap.hf_mass_a > 1e-4);
  CHECK(gap.hf_mass_b == 0.0);
}

TEST_CASE("config JSON round trip, manifest nesting, validation", "[cli]") {
  auto cfg = tiny_config("x");
  auto j = pipeline::config_to_json(cfg);
  CHECK_FALSE(j.contains("out_dir"));
  auto back = pipeline::config_from_json(j);
  CHECK(back.seed == cfg.seed);
  CHECK(back.N == cfg.N);
  CHECK(back.K == cfg.K);
  CHECK(back.temperature == cfg.temperature);
  CHECK(back.view.kind == cfg.view.kind);

  // the same object nested under "config" (run manifests) also loads
  nlohmann::json manifest;
  manifest["config"] = j;
  auto nested = pipeline::config_from_json(manifest);
  CHECK(nested.K == cfg.K);

  nlohmann::json bad;
  bad["K"] = "not a number";
  CHECK_THROWS_AS(pipeline::config_from_json(bad), config_error);

  auto broken = cfg;
  broken.M = 100;
  CHECK_THROWS_AS(pipeline::validate(broken), config_error);
  broken = cfg;
  broken.temperature = 0.0;
  CHECK_THROWS_AS(pipeline::validate(broken), config_error);
  broken = cfg;
  broken.view.kind = "fisheye";
  CHECK_THROWS_AS(pipeline::validate(broken), config_error);
  broken = cfg;
  broken.pad_w = 100;
  CHECK_THROWS_AS(pipeline::validate(broken), config_error);
}

TEST_CASE("pipeline reruns are byte-identical and replayable", "[cli]") {
  auto base = fs::temp_directory_path() / "panosphere_pipe";
  fs::remove_all(base);
  fs::create_directories(base);

  auto cfg_a = tiny_config((base / "run_a").string());
  auto result_a = pipeline::run_pipeline(cfg_a);
  REQUIRE(result_a.samples.size() == 3);

  auto cfg_b = tiny_config((base / "run_b").string());
  pipeline::run_pipeline(cfg_b);

  auto snap_a = dir_snapshot(base / "run_a");
  auto snap_b = dir_snapshot(base / "run_b");
  REQUIRE(snap_a.size() == snap_b.size());
  for (const auto& [rel, bytes] : snap_a) {
    REQUIRE(snap_b.count(rel) == 1);
    REQUIRE(snap_b.at(rel) == bytes);
  }

  // the manifest alone suffices to replay the run
  auto replay_cfg = pipeline::load_config(result_a.manifest_path);
  replay_cfg.out_dir = (base / "run_c").string();
  pipeline::run_pipeline(replay_cfg);
  auto snap_c = dir_snapshot(base / "run_c");
  REQUIRE(snap_c.size() == snap_a.size());
  for (const auto& [rel, bytes] : snap_a) REQUIRE(snap_c.at(rel) == bytes);

  fs::remove_all(base);
}

TEST_CASE("pipeline keeps the given region fixed across samples", "[cli]") {
  auto base = fs::temp_directory_path() / "panosphere_pipe_cond";
  fs::remove_all(base);
  auto cfg = tiny_config((base / "run").string());
  cfg.view.face = "right";
  auto result = pipeline::run_pipeline(cfg);

  auto mask_hr = load_mask_png((base / "run" / "mask_hr.png").string());
  auto masked_hr = load_png((base / "run" / "masked_hr.png").string());
  auto alpha = refine::blend_alpha(mask_hr, cfg.feather);

  std::vector<ErpImage> finals;
  for (const auto& s : result.samples) finals.push_back(load_png(s.final_png));
  bool outputs_differ = false;
  for (std::size_t s = 1; s < finals.size(); ++s)
    if (finals[s].data != finals[0].data) outputs_differ = true;
  CHECK(outputs_differ);

  for (int j = 0; j < mask_hr.height; ++j)
    for (int i = 0; i < mask_hr.width; ++i) {
      if (alpha[static_cast<std::size_t>(j) * mask_hr.width + i] != 1.0) continue;
      for (int c = 0; c < 3; ++c) {
        float v0 = finals[0].at(j, i, c);
        for (std::size_t s = 1; s < finals.size(); ++s)
          REQUIRE(finals[s].at(j, i, c) == v0);
        REQUIRE(v0 == masked_hr.at(j, i, c));
      }
    }
  fs::remove_all(base);
}

TEST_CASE("cli exit codes follow the error taxonomy", "[cli]") {
  auto base = fs::temp_directory_path() / "panosphere_cli_codes";
  fs::remove_all(base);
  fs::create_directories(base);

  // missing config file -> I/O error
  CHECK(run_cli("mask --config " + (base / "none.json").string()) == 4);

  // malformed config -> config error
  auto bad = (base / "bad.json").string();
  std::ofstream(bad) << "{ not json";
  CHECK(run_cli("mask --config " + bad) == 2);

  // out-of-range parameter -> config error
  CHECK(run_cli("mask --height 64 --view-face nowhere -o " +
                (base / "m").string()) == 2);

  // missing input image -> I/O error
  CHECK(run_cli("metrics " + (base / "a.png").string() + " " +
                (base / "b.png").string() + " -o " + (base / "m2").string()) == 4);

  // a good run exits 0
  CHECK(run_cli("mask --height 32 --view-face ceil -o " +
                (base / "ok").string()) == 0);
  CHECK(fs::exists(base / "ok" / "mask.png"));

  fs::remove_all(base);
}

TEST_CASE("cli synth and freq-report round trip", "[cli]") {
  auto base = fs::temp_directory_path() / "panosphere_cli_synth";
  fs::remove_all(base);
  fs::create_directories(base);

  CHECK(run_cli("synth --height 32 --corpus-count 2 --seed 5 -o " +
                (base / "corpus").string()) == 0);
  REQUIRE(fs::exists(base / "corpus" / "synth_00000.png"));
  REQUIRE(fs::exists(base / "corpus" / "synth_00001.png"));

  CHECK(run_cli("freq-report " + (base / "corpus" / "synth_00000.png").string() +
                " " + (base / "corpus" / "synth_00001.png").string() +
                " --amp-png -o " + (base / "freq").string()) == 0);
  CHECK(fs::exists(base / "freq" / "freq_gap.csv"));
  CHECK(fs::exists(base / "freq" / "freq_summary.json"));
  CHECK(fs::exists(base / "freq" / "amp_a.png"));

  CHECK(run_cli("metrics " + (base / "corpus" / "synth_00000.png").string() +
                " " + (base / "corpus" / "synth_00000.png").string() + " -o " +
                (base / "met").string()) == 0);
  std::string csv = read_bytes(base / "met" / "metrics.csv");
  CHECK(csv.find("ws_psnr,99") != std::string::npos);

  fs::remove_all(base);
}
