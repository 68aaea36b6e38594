#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "panosphere/codeseq.hpp"
#include "panosphere/core.hpp"
#include "panosphere/image_io.hpp"
#include "panosphere/metrics.hpp"
#include "panosphere/quantizer.hpp"
#include "panosphere/refine.hpp"
#include "panosphere/spectrum.hpp"
#include "panosphere/sphgeo.hpp"
#include "panosphere/synth.hpp"

namespace panosphere {
namespace pipeline {

namespace fs = std::filesystem;

// RNG stream tags; every stream is derive(seed, index, tag).
inline constexpr std::uint64_t kInputTag = 0x494e5054;     // "INPT"
inline constexpr std::uint64_t kFitTag = 0x46495443;       // "FITC"
inline constexpr std::uint64_t kViewTag = 0x56494557;      // "VIEW"
inline constexpr std::uint64_t kOutpaintTag = 0x4f555450;  // "OUTP"

/// Viewport selection as it appears in config files; angles in degrees.
struct ViewConfig {
  std::string kind = "cube_face";
  std::string face = "front";
  double theta_deg = 90.0;
  double phi_deg = 0.0;
  double fov_x_deg = 120.0;
  double fov_y_deg = 120.0;
};

/// Run parameters; config file JSON plus flag overrides, flags win. Every
/// default is recorded into the run manifest.
struct RunConfig {
  std::uint64_t seed = 1;
  int N = 256;
  int M = 512;
  int f = 16;
  int K = 512;
  int D = 3;
  int n = 3;
  double alpha = 0.05;
  int pad_w = 1;
  double temperature = 0.8;
  int feather = 8;
  int n_samples = 3;
  int kmeans_iters = 6;
  int corpus_count = 64;
  int bins = 32;
  std::string init_mode = "sh_seeded";
  ViewConfig view;

  std::string out_dir = "run";
  std::string input;      // optional PNG; synthesized from the seed if empty
  std::string input_dir;  // optional corpus directory of PNGs
  std::string codebook;   // optional fitted codebook JSON
  std::string model;      // optional fitted sequence model
};

inline sphgeo::ViewSpec to_view_spec(const ViewConfig& vc) {
  sphgeo::ViewSpec view;
  if (vc.kind == "cube_face") {
    view.kind = sphgeo::ViewSpec::Kind::cube_face;
    view.face = sphgeo::face_from_name(vc.face);
  } else if (vc.kind == "tangent") {
    view.kind = sphgeo::ViewSpec::Kind::tangent;
    view.center = sphgeo::make_coord(vc.theta_deg * sphgeo::kPi / 180.0,
                                     vc.phi_deg * sphgeo::kPi / 180.0);
    view.fov_x = vc.fov_x_deg * sphgeo::kPi / 180.0;
    view.fov_y = vc.fov_y_deg * sphgeo::kPi / 180.0;
  } else {
    throw config_error("view.kind must be cube_face or tangent");
  }
  return view;
}

inline void validate(const RunConfig& cfg) {
  if (cfg.M != 2 * cfg.N) throw config_error("config: M must equal 2N");
  if (cfg.N < 8) throw config_error("config: N too small");
  if (cfg.f < 1 || cfg.N % cfg.f != 0 || cfg.M % cfg.f != 0)
    throw config_error("config: f must divide N and M");
  if (cfg.K < 2) throw config_error("config: K must be >= 2");
  if (cfg.D < 0 || cfg.D > harmonics::kMaxDegree)
    throw config_error("config: D outside [0, 12]");
  if (cfg.n < 1 || cfg.n > codeseq::NGramModel::kMaxContext + 1)
    throw config_error("config: n outside [1, 9]");
  if (!(cfg.alpha > 0.0)) throw config_error("config: alpha must be > 0");
  if (cfg.pad_w < 0 || cfg.pad_w > (cfg.M / cfg.f) / 4)
    throw config_error("config: pad_w outside [0, w/4]");
  if (!(cfg.temperature > 0.0))
    throw config_error("config: temperature must be > 0");
  if (cfg.feather < 0) throw config_error("config: feather must be >= 0");
  if (cfg.n_samples < 1) throw config_error("config: n_samples must be >= 1");
  if (cfg.kmeans_iters < 1) throw config_error("config: kmeans_iters >= 1");
  if (cfg.corpus_count < 1) throw config_error("config: corpus_count >= 1");
  if (cfg.bins < 2) throw config_error("config: bins must be >= 2");
  to_view_spec(cfg.view);
  quant::init_mode_from_name(cfg.init_mode);
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["N"] = cfg.N;
  j["M"] = cfg.M;
  j["f"] = cfg.f;
  j["K"] = cfg.K;
  j["D"] = cfg.D;
  j["n"] = cfg.n;
  j["alpha"] = cfg.alpha;
  j["pad_w"] = cfg.pad_w;
  j["temperature"] = cfg.temperature;
  j["feather"] = cfg.feather;
  j["n_samples"] = cfg.n_samples;
  j["kmeans_iters"] = cfg.kmeans_iters;
  j["corpus_count"] = cfg.corpus_count;
  j["bins"] = cfg.bins;
  j["init_mode"] = cfg.init_mode;
  j["view"] = {{"kind", cfg.view.kind},       {"face", cfg.view.face},
               {"theta_deg", cfg.view.theta_deg}, {"phi_deg", cfg.view.phi_deg},
               {"fov_x_deg", cfg.view.fov_x_deg}, {"fov_y_deg", cfg.view.fov_y_deg}};
  j["input"] = cfg.input;
  j["input_dir"] = cfg.input_dir;
  j["codebook"] = cfg.codebook;
  j["model"] = cfg.model;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& root) {
  const nlohmann::json& j = root.contains("config") ? root.at("config") : root;
  RunConfig cfg;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seed", cfg.seed);
    get("N", cfg.N);
    get("M", cfg.M);
    get("f", cfg.f);
    get("K", cfg.K);
    get("D", cfg.D);
    get("n", cfg.n);
    get("alpha", cfg.alpha);
    get("pad_w", cfg.pad_w);
    get("temperature", cfg.temperature);
    get("feather", cfg.feather);
    get("n_samples", cfg.n_samples);
    get("kmeans_iters", cfg.kmeans_iters);
    get("corpus_count", cfg.corpus_count);
    get("bins", cfg.bins);
    get("init_mode", cfg.init_mode);
    get("input", cfg.input);
    get("input_dir", cfg.input_dir);
    get("codebook", cfg.codebook);
    get("model", cfg.model);
    if (j.contains("view")) {
      const auto& v = j.at("view");
      auto getv = [&](const char* key, auto& field) {
        if (v.contains(key)) field = v.at(key).get<std::decay_t<decltype(field)>>();
      };
      getv("kind", cfg.view.kind);
      getv("face", cfg.view.face);
      getv("theta_deg", cfg.view.theta_deg);
      getv("phi_deg", cfg.view.phi_deg);
      getv("fov_x_deg", cfg.view.fov_x_deg);
      getv("fov_y_deg", cfg.view.fov_y_deg);
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("load_config: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("load_config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

namespace detail {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  auto tag = [&](const char* what) {
    return std::string("[") + name + "] " + what;
  };
  try {
    return fn();
  } catch (const config_error& e) {
    throw config_error(tag(e.what()));
  } catch (const io_error& e) {
    throw io_error(tag(e.what()));
  } catch (const data_error& e) {
    throw data_error(tag(e.what()));
  } catch (const std::invalid_argument& e) {
    throw config_error(tag(e.what()));
  } catch (const std::out_of_range& e) {
    throw data_error(tag(e.what()));
  } catch (const std::logic_error& e) {
    throw data_error(tag(e.what()));
  }
}

inline std::vector<std::string> list_pngs(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw data_error("no PNG files under " + dir);
  return files;
}

}  // namespace detail

/// Training corpus: PNGs from input_dir when given, otherwise synthesized.
inline std::vector<ErpImage> load_corpus(const RunConfig& cfg) {
  if (!cfg.input_dir.empty()) {
    std::vector<ErpImage> corpus;
    for (const auto& path : detail::list_pngs(cfg.input_dir)) {
      ErpImage img = load_png(path);
      if (img.height != cfg.N || img.width != cfg.M)
        throw data_error("corpus image " + path + " does not match N x M");
      corpus.push_back(std::move(img));
    }
    return corpus;
  }
  return synth::synth_corpus(cfg.N, cfg.M, cfg.corpus_count, cfg.seed);
}

/// Codebook from cfg.codebook, or fit on the corpus and saved to save_path.
inline quant::Codebook ensure_codebook(const RunConfig& cfg,
                                       const std::vector<ErpImage>& corpus,
                                       const harmonics::ShMap& sh,
                                       const std::string& save_path) {
  if (!cfg.codebook.empty()) {
    quant::Codebook cb = quant::codebook_load_json(cfg.codebook);
    if (cb.scale != cfg.f)
      throw config_error("codebook scale differs from config f");
    return cb;
  }
  std::vector<quant::FeatureGrid> features;
  features.reserve(corpus.size());
  for (const auto& img : corpus)
    features.push_back(quant::patch_encode(img, cfg.f, &sh));
  quant::Codebook cb = quant::fit_codebook(
      features, cfg.K, quant::init_mode_from_name(cfg.init_mode),
      rng::derive(cfg.seed, 0, kFitTag), cfg.kmeans_iters);
  cb.corpus = "complete";
  if (!save_path.empty()) quant::codebook_save_json(save_path, cb);
  return cb;
}

/// Sequence model from cfg.model, or fit on the quantized corpus with one
/// random cube-face view per image, saved to save_path.
inline codeseq::NGramModel ensure_model(const RunConfig& cfg,
                                        const std::vector<ErpImage>& corpus,
                                        const harmonics::ShMap& sh,
                                        const quant::Codebook& cb,
                                        const std::string& save_path) {
  if (!cfg.model.empty()) return codeseq::model_load(cfg.model);
  std::vector<quant::CodeGrid> grids;
  std::vector<MaskMap> conditions;
  grids.reserve(corpus.size());
  conditions.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    quant::FeatureGrid enc = quant::patch_encode(corpus[i], cfg.f, &sh);
    grids.push_back(quant::quantize(enc, cb).codes);
    auto face = static_cast<sphgeo::CubeFace>(rng::derive(cfg.seed, i, kViewTag) % 6);
    conditions.push_back(
        codeseq::latent_mask(sphgeo::cube_face_mask(face, cfg.N, cfg.M), cfg.f));
  }
  codeseq::NGramModel model =
      codeseq::fit_ngram(grids, conditions, cfg.K, cfg.n, cfg.alpha);
  if (!save_path.empty()) codeseq::model_save(save_path, model);
  return model;
}

struct SampleResult {
  std::string final_png;
  double ws_psnr = 0.0;
  double psnr = 0.0;
  double hf_mass_final = 0.0;
  double hf_mass_target = 0.0;
};

struct PipelineResult {
  std::string run_dir;
  std::string manifest_path;
  std::vector<SampleResult> samples;
};

/// Full chain: mask -> patch_encode -> quantize -> latent_mask ->
/// diverse_outpaint -> patch_decode -> upscale2x -> blend_refine ->
/// metrics + freq_gap, with every artifact and the manifest under out_dir.
inline PipelineResult run_pipeline(const RunConfig& cfg,
                                   std::ostream* log = nullptr) {
  validate(cfg);
  auto note = [&](const std::string& line) {
    if (log) (*log) << line << '\n';
  };

  fs::path dir(cfg.out_dir);
  detail::stage("setup", [&] {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create " + dir.string());
    return 0;
  });

  ErpImage input = detail::stage("input", [&] {
    if (!cfg.input.empty()) {
      ErpImage img = load_png(cfg.input);
      if (img.height != cfg.N || img.width != cfg.M)
        throw data_error("input image does not match configured N x M");
      return img;
    }
    return synth::synth_image(cfg.N, cfg.M, rng::derive(cfg.seed, 0, kInputTag));
  });
  save_png((dir / "input.png").string(), input);

  sphgeo::ViewSpec view = to_view_spec(cfg.view);
  MaskMap mask = detail::stage("mask", [&] {
    return sphgeo::view_mask(view, cfg.N, cfg.M);
  });
  save_mask_png((dir / "mask.png").string(), mask);
  ErpImage masked = sphgeo::apply_mask(input, mask);
  save_png((dir / "masked.png").string(), masked);

  note("fitting (or loading) codebook and sequence model");
  harmonics::ShMap sh = detail::stage("shmap", [&] {
    return harmonics::sh_map(cfg.N, cfg.M, cfg.D);
  });
  std::vector<ErpImage> corpus = detail::stage("corpus", [&] {
    return load_corpus(cfg);
  });
  quant::Codebook cb = detail::stage("fit-codebook", [&] {
    return ensure_codebook(cfg, corpus, sh, (dir / "codebook.json").string());
  });
  codeseq::NGramModel model = detail::stage("fit-model", [&] {
    return ensure_model(cfg, corpus, sh, cb, (dir / "model.ngrm").string());
  });

  quant::QuantizeResult quantized = detail::stage("quantize", [&] {
    quant::FeatureGrid enc = quant::patch_encode(masked, cfg.f, &sh);
    return quant::quantize(enc, cb);
  });
  MaskMap latent = detail::stage("latent-mask", [&] {
    return codeseq::latent_mask(mask, cfg.f);
  });
  {
    std::vector<std::uint16_t> grid16(quantized.codes.indices.begin(),
                                      quantized.codes.indices.end());
    save_gray16_png((dir / "grid_input.png").string(), quantized.codes.h,
                    quantized.codes.w, grid16);
    save_mask_png((dir / "latent_mask.png").string(), latent);
  }

  codeseq::OutpaintTask task;
  task.grid = quantized.codes;
  task.known = latent;
  task.pad_w = cfg.pad_w;
  task.temperature = cfg.temperature;
  task.seed = rng::derive(cfg.seed, 0, kOutpaintTag);
  std::vector<quant::CodeGrid> samples = detail::stage("outpaint", [&] {
    return codeseq::diverse_outpaint(model, task, cfg.n_samples);
  });

  // high-resolution side: the mask is re-derived analytically at 2x
  ErpImage target_hr = refine::upscale2x(input);
  MaskMap mask_hr = detail::stage("mask-hr", [&] {
    return sphgeo::view_mask(view, 2 * cfg.N, 2 * cfg.M);
  });
  ErpImage masked_hr = sphgeo::apply_mask(target_hr, mask_hr);
  save_png((dir / "masked_hr.png").string(), masked_hr);
  save_mask_png((dir / "mask_hr.png").string(), mask_hr);

  PipelineResult result;
  result.run_dir = dir.string();
  std::string run_id = "seed" + std::to_string(cfg.seed);
  std::string metrics_csv = (dir / "metrics.csv").string();

  nlohmann::json sample_artifacts = nlohmann::json::array();
  nlohmann::json sample_results = nlohmann::json::array();
  for (int s = 0; s < cfg.n_samples; ++s) {
    std::string tag = "sample_" + std::to_string(s);
    fs::path sdir = dir / tag;
    std::error_code ec;
    fs::create_directories(sdir, ec);
    if (ec) throw io_error("[sample] cannot create " + sdir.string());

    const quant::CodeGrid& grid = samples[s];
    std::vector<std::uint16_t> grid16(grid.indices.begin(), grid.indices.end());
    save_gray16_png((sdir / "grid.png").string(), grid.h, grid.w, grid16);

    ErpImage gen = detail::stage("decode", [&] {
      quant::FeatureGrid dec = quantized.quantized;  // shape template
      for (std::size_t ci = 0; ci < grid.indices.size(); ++ci)
        std::copy(cb.entry(grid.indices[ci]), cb.entry(grid.indices[ci]) + cb.d,
                  &dec.data[ci * dec.d]);
      return quant::patch_decode(dec, cfg.f);
    });
    save_png((sdir / "gen.png").string(), gen);

    ErpImage gen_up = refine::upscale2x(gen);
    ErpImage final_img = detail::stage("blend", [&] {
      return refine::blend_refine(gen_up, masked_hr, mask_hr, cfg.feather);
    });
    std::string final_path = (sdir / "final.png").string();
    save_png(final_path, final_img);

    SampleResult sr;
    sr.final_png = final_path;
    sr.ws_psnr = metrics::ws_psnr(final_img, target_hr);
    sr.psnr = metrics::psnr(final_img, target_hr);
    spectrum::FreqGapReport gap = detail::stage("freq-gap", [&] {
      return spectrum::freq_gap(final_img, target_hr, cfg.bins);
    });
    sr.hf_mass_final = gap.hf_mass_a;
    sr.hf_mass_target = gap.hf_mass_b;
    spectrum::freq_gap_save_csv((sdir / "freq_gap.csv").string(), gap);
    spectrum::freq_gap_save_summary((sdir / "freq_summary.json").string(), gap);
    metrics::append_metric_csv(metrics_csv, run_id, tag, "ws_psnr", sr.ws_psnr);
    metrics::append_metric_csv(metrics_csv, run_id, tag, "psnr", sr.psnr);
    result.samples.push_back(sr);

    sample_artifacts.push_back({{"grid", tag + "/grid.png"},
                                {"gen", tag + "/gen.png"},
                                {"final", tag + "/final.png"},
                                {"freq_gap", tag + "/freq_gap.csv"}});
    sample_results.push_back({{"ws_psnr", sr.ws_psnr},
                              {"psnr", sr.psnr},
                              {"hf_mass_final", sr.hf_mass_final},
                              {"hf_mass_target", sr.hf_mass_target}});
    note(tag + " ws_psnr=" + std::to_string(sr.ws_psnr));
  }

  // out_dir stays outside the manifest so replayed runs can live anywhere
  nlohmann::json manifest;
  manifest["format"] = "panosphere-run";
  manifest["version"] = 1;
  manifest["config"] = config_to_json(cfg);
  manifest["artifacts"] = {{"input", "input.png"},
                           {"mask", "mask.png"},
                           {"masked", "masked.png"},
                           {"masked_hr", "masked_hr.png"},
                           {"mask_hr", "mask_hr.png"},
                           {"grid_input", "grid_input.png"},
                           {"latent_mask", "latent_mask.png"},
                           {"codebook", cfg.codebook.empty() ? "codebook.json" : cfg.codebook},
                           {"model", cfg.model.empty() ? "model.ngrm" : cfg.model},
                           {"metrics", "metrics.csv"},
                           {"samples", sample_artifacts}};
  manifest["results"] = {{"samples", sample_results}};
  result.manifest_path = (dir / "manifest.json").string();
  std::ofstream os(result.manifest_path);
  if (!os) throw io_error("[manifest] cannot open " + result.manifest_path);
  os << manifest.dump(1) << '\n';
  if (!os) throw io_error("[manifest] write failed");
  return result;
}

}  // namespace pipeline
}  // namespace panosphere
