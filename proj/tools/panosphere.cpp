// panosphere: spherical panorama toolkit CLI.
//
// Commands: synth, shmap, mask, fit-codebook, reconstruct, fit-model,
// outpaint, freq-report, metrics, pipeline. Every command is a pure
// function of (config file, flags, seed); reruns reproduce outputs
// byte-for-byte. Exit codes: 0 ok, 2 config error, 3 data error, 4 I/O.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "panosphere/codeseq.hpp"
#include "panosphere/harmonics.hpp"
#include "panosphere/image_io.hpp"
#include "panosphere/metrics.hpp"
#include "panosphere/pipeline.hpp"
#include "panosphere/quantizer.hpp"
#include "panosphere/refine.hpp"
#include "panosphere/spectrum.hpp"
#include "panosphere/sphgeo.hpp"
#include "panosphere/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace panosphere;

struct Cli {
  std::string config_path;
  pipeline::RunConfig cfg;
};

void add_common_flags(CLI::App* cmd, Cli& cli) {
  cmd->add_option("--config", cli.config_path, "JSON config (or run manifest)");
  // flag overrides win over the config file; applied after load
  cmd->add_option("--seed", cli.cfg.seed, "run seed");
  cmd->add_option("--height", cli.cfg.N, "panorama height N (width is 2N)");
  cmd->add_option("--scale-f", cli.cfg.f, "patch scale factor");
  cmd->add_option("--codebook-size", cli.cfg.K, "codebook entries K");
  cmd->add_option("--degree", cli.cfg.D, "SH degree D");
  cmd->add_option("--order", cli.cfg.n, "sequence model order n");
  cmd->add_option("--alpha", cli.cfg.alpha, "smoothing alpha");
  cmd->add_option("--pad-w", cli.cfg.pad_w, "circular pad width (latent cols)");
  cmd->add_option("--temperature", cli.cfg.temperature, "sampling temperature");
  cmd->add_option("--feather", cli.cfg.feather, "blend feather width (pixels)");
  cmd->add_option("--samples", cli.cfg.n_samples, "diverse sample count");
  cmd->add_option("--iters", cli.cfg.kmeans_iters, "k-means iterations");
  cmd->add_option("--corpus-count", cli.cfg.corpus_count, "synthetic corpus size");
  cmd->add_option("--bins", cli.cfg.bins, "frequency report radial bins");
  cmd->add_option("--init", cli.cfg.init_mode, "codebook init: random|sh_seeded");
  cmd->add_option("--view-kind", cli.cfg.view.kind, "cube_face|tangent");
  cmd->add_option("--view-face", cli.cfg.view.face,
                  "front|right|back|left|ceil|floor");
  cmd->add_option("--view-theta", cli.cfg.view.theta_deg, "tangent center (deg)");
  cmd->add_option("--view-phi", cli.cfg.view.phi_deg, "tangent center (deg)");
  cmd->add_option("--fov-x", cli.cfg.view.fov_x_deg, "tangent FoV x (deg)");
  cmd->add_option("--fov-y", cli.cfg.view.fov_y_deg, "tangent FoV y (deg)");
  cmd->add_option("--input", cli.cfg.input, "input panorama PNG");
  cmd->add_option("--input-dir", cli.cfg.input_dir, "corpus directory of PNGs");
  cmd->add_option("--codebook", cli.cfg.codebook, "fitted codebook JSON");
  cmd->add_option("--model", cli.cfg.model, "fitted sequence model");
  cmd->add_option("--out-dir,-o", cli.cfg.out_dir, "output directory");
}

/// Re-parse so that explicit flags override values loaded from --config.
pipeline::RunConfig resolve_config(CLI::App* cmd, Cli& cli,
                                   const std::vector<std::string>& args) {
  if (cli.config_path.empty()) {
    cli.cfg.M = 2 * cli.cfg.N;
    return cli.cfg;
  }
  pipeline::RunConfig cfg = pipeline::load_config(cli.config_path);
  for (const auto* opt : cmd->get_options()) {
    if (opt->count() == 0) continue;
    (void)args;
    // flags already live in cli.cfg; copy the ones that were given
    const std::string& name = opt->get_name();
    if (name == "--seed") cfg.seed = cli.cfg.seed;
    else if (name == "--height") cfg.N = cli.cfg.N;
    else if (name == "--scale-f") cfg.f = cli.cfg.f;
    else if (name == "--codebook-size") cfg.K = cli.cfg.K;
    else if (name == "--degree") cfg.D = cli.cfg.D;
    else if (name == "--order") cfg.n = cli.cfg.n;
    else if (name == "--alpha") cfg.alpha = cli.cfg.alpha;
    else if (name == "--pad-w") cfg.pad_w = cli.cfg.pad_w;
    else if (name == "--temperature") cfg.temperature = cli.cfg.temperature;
    else if (name == "--feather") cfg.feather = cli.cfg.feather;
    else if (name == "--samples") cfg.n_samples = cli.cfg.n_samples;
    else if (name == "--iters") cfg.kmeans_iters = cli.cfg.kmeans_iters;
    else if (name == "--corpus-count") cfg.corpus_count = cli.cfg.corpus_count;
    else if (name == "--bins") cfg.bins = cli.cfg.bins;
    else if (name == "--init") cfg.init_mode = cli.cfg.init_mode;
    else if (name == "--view-kind") cfg.view.kind = cli.cfg.view.kind;
    else if (name == "--view-face") cfg.view.face = cli.cfg.view.face;
    else if (name == "--view-theta") cfg.view.theta_deg = cli.cfg.view.theta_deg;
    else if (name == "--view-phi") cfg.view.phi_deg = cli.cfg.view.phi_deg;
    else if (name == "--fov-x") cfg.view.fov_x_deg = cli.cfg.view.fov_x_deg;
    else if (name == "--fov-y") cfg.view.fov_y_deg = cli.cfg.view.fov_y_deg;
    else if (name == "--input") cfg.input = cli.cfg.input;
    else if (name == "--input-dir") cfg.input_dir = cli.cfg.input_dir;
    else if (name == "--codebook") cfg.codebook = cli.cfg.codebook;
    else if (name == "--model") cfg.model = cli.cfg.model;
    else if (name == "--out-dir") cfg.out_dir = cli.cfg.out_dir;
  }
  cfg.M = 2 * cfg.N;
  return cfg;
}

void make_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir);
}

int cmd_synth(const pipeline::RunConfig& cfg) {
  pipeline::validate(cfg);
  make_out_dir(cfg.out_dir);
  auto corpus = synth::synth_corpus(cfg.N, cfg.M, cfg.corpus_count, cfg.seed);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%05zu.png", i);
    save_png((fs::path(cfg.out_dir) / name).string(), corpus[i]);
  }
  std::cout << "wrote " << corpus.size() << " panoramas to " << cfg.out_dir
            << "\n";
  return 0;
}

int cmd_shmap(const pipeline::RunConfig& cfg) {
  pipeline::validate(cfg);
  make_out_dir(cfg.out_dir);
  auto map = harmonics::sh_map(cfg.N, cfg.M, cfg.D);
  std::string path = (fs::path(cfg.out_dir) / "shmap.bin").string();
  harmonics::shmap_save(path, map);
  std::cout << "wrote " << path << " (" << map.channels << " channels)\n";
  return 0;
}

int cmd_mask(const pipeline::RunConfig& cfg) {
  pipeline::validate(cfg);
  make_out_dir(cfg.out_dir);
  MaskMap mask = sphgeo::view_mask(pipeline::to_view_spec(cfg.view), cfg.N, cfg.M);
  std::string path = (fs::path(cfg.out_dir) / "mask.png").string();
  save_mask_png(path, mask);
  std::cout << "wrote " << path << " (" << mask.count_given() << " given pixels)\n";
  return 0;
}

int cmd_fit_codebook(const pipeline::RunConfig& cfg, const std::string& corpus_kind) {
  pipeline::validate(cfg);
  make_out_dir(cfg.out_dir);
  auto corpus = pipeline::load_corpus(cfg);
  auto sh = harmonics::sh_map(cfg.N, cfg.M, cfg.D);
  if (corpus_kind == "masked") {
    // refit on view-masked copies, one random cube face per image
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      auto face = static_cast<sphgeo::CubeFace>(
          rng::derive(cfg.seed, i, pipeline::kViewTag) % 6);
      corpus[i] = sphgeo::apply_mask(
          corpus[i], sphgeo::cube_face_mask(face, cfg.N, cfg.M));
    }
  }
  std::vector<quant::FeatureGrid> features;
  features.reserve(corpus.size());
  for (const auto& img : corpus)
    features.push_back(quant::patch_encode(img, cfg.f, &sh));
  quant::Codebook cb = quant::fit_codebook(
      features, cfg.K, quant::init_mode_from_name(cfg.init_mode),
      rng::derive(cfg.seed, 0, pipeline::kFitTag), cfg.kmeans_iters);
  cb.corpus = corpus_kind;
  std::string path = (fs::path(cfg.out_dir) / "codebook.json").string();
  quant::codebook_save_json(path, cb);

  std::vector<quant::CodeGrid> grids;
  for (const auto& feat : features)
    grids.push_back(quant::quantize(feat, cb).codes);
  std::cout << "wrote " << path << " usage="
            << quant::codebook_usage(grids, cfg.K) << "\n";
  return 0;
}

int cmd_reconstruct(const pipeline::RunConfig& cfg) {
  pipeline::validate(cfg);
  if (cfg.input.empty()) throw config_error("reconstruct: --input required");
  if (cfg.codebook.empty()) throw config_error("reconstruct: --codebook required");
  make_out_dir(cfg.out_dir);
  ErpImage img = load_png(cfg.input);
  quant::Codebook cb = quant::codebook_load_json(cfg.codebook);
  auto recon = quant::reconstruct(img, cb, cfg.f);
  std::string path = (fs::path(cfg.out_dir) / "recon.png").string();
  save_png(path, recon.image);
  metrics::append_metric_csv((fs::path(cfg.out_dir) / "metrics.csv").string(),
                             "seed" + std::to_string(cfg.seed), cfg.input,
                             "ws_psnr", recon.ws_psnr);
  std::cout << "wrote " << path << " ws_psnr=" << recon.ws_psnr << "\n";
  return 0;
}

int cmd_fit_model(const pipeline::RunConfig& cfg) {
  pipeline::validate(cfg);
  if (cfg.codebook.empty()) throw config_error("fit-model: --codebook required");
  make_out_dir(cfg.out_dir);
  auto corpus = pipeline::load_corpus(cfg);
  auto sh = harmonics::sh_map(cfg.N, cfg.M, cfg.D);
  quant::Codebook cb = quant::codebook_load_json(cfg.codebook);
  auto model = pipeline::ensure_model(
      cfg, corpus, sh, cb, (fs::path(cfg.out_dir) / "model.ngrm").string());
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "model.ngrm").string()
            << " (" << model.table.size() << " contexts)\n";
  return 0;
}

int cmd_outpaint(const pipeline::RunConfig& cfg) {
  pipeline::validate(cfg);
  if (cfg.input.empty()) throw config_error("outpaint: --input required");
  if (cfg.codebook.empty()) throw config_error("outpaint: --codebook required");
  if (cfg.model.empty()) throw config_error("outpaint: --model required");
  make_out_dir(cfg.out_dir);

  ErpImage input = load_png(cfg.input);
  if (input.height != cfg.N || input.width != cfg.M)
    throw data_error("outpaint: input does not match configured N x M");
  quant::Codebook cb = quant::codebook_load_json(cfg.codebook);
  codeseq::NGramModel model = codeseq::model_load(cfg.model);
  auto sh = harmonics::sh_map(cfg.N, cfg.M, cfg.D);

  MaskMap mask = sphgeo::view_mask(pipeline::to_view_spec(cfg.view), cfg.N, cfg.M);
  ErpImage masked = sphgeo::apply_mask(input, mask);
  auto quantized = quant::quantize(quant::patch_encode(masked, cfg.f, &sh), cb);

  codeseq::OutpaintTask task;
  task.grid = quantized.codes;
  task.known = codeseq::latent_mask(mask, cfg.f);
  task.pad_w = cfg.pad_w;
  task.temperature = cfg.temperature;
  task.seed = rng::derive(cfg.seed, 0, pipeline::kOutpaintTag);
  auto samples = codeseq::diverse_outpaint(model, task, cfg.n_samples);

  for (int s = 0; s < cfg.n_samples; ++s) {
    quant::FeatureGrid dec = quantized.quantized;
    for (std::size_t ci = 0; ci < samples[s].indices.size(); ++ci)
      std::copy(cb.entry(samples[s].indices[ci]),
                cb.entry(samples[s].indices[ci]) + cb.d, &dec.data[ci * dec.d]);
    char name[32];
    std::snprintf(name, sizeof(name), "outpaint_%02d.png", s);
    save_png((fs::path(cfg.out_dir) / name).string(),
             quant::patch_decode(dec, cfg.f));
  }
  std::cout << "wrote " << cfg.n_samples << " outpaintings to " << cfg.out_dir
            << "\n";
  return 0;
}

int cmd_freq_report(const pipeline::RunConfig& cfg, const std::string& img_a,
                    const std::string& img_b, bool amp_png) {
  make_out_dir(cfg.out_dir);
  ErpImage a = load_png(img_a);
  ErpImage b = load_png(img_b);
  auto report = spectrum::freq_gap(a, b, cfg.bins);
  spectrum::freq_gap_save_csv((fs::path(cfg.out_dir) / "freq_gap.csv").string(),
                              report);
  spectrum::freq_gap_save_summary(
      (fs::path(cfg.out_dir) / "freq_summary.json").string(), report);
  if (amp_png) {
    auto dump_amp = [&](const ErpImage& img, const char* name) {
      auto ap = spectrum::amp_phase(spectrum::center_shift(spectrum::dft2_luma(img)));
      save_png((fs::path(cfg.out_dir) / name).string(), spectrum::amp_to_image(ap));
    };
    dump_amp(a, "amp_a.png");
    dump_amp(b, "amp_b.png");
  }
  std::cout << "hf_mass_a=" << report.hf_mass_a
            << " hf_mass_b=" << report.hf_mass_b << "\n";
  return 0;
}

int cmd_metrics(const pipeline::RunConfig& cfg, const std::string& img_a,
                const std::string& img_b) {
  make_out_dir(cfg.out_dir);
  ErpImage a = load_png(img_a);
  ErpImage b = load_png(img_b);
  double ws = metrics::ws_psnr(a, b);
  double ps = metrics::psnr(a, b);
  std::string csv = (fs::path(cfg.out_dir) / "metrics.csv").string();
  std::string run_id = "seed" + std::to_string(cfg.seed);
  metrics::append_metric_csv(csv, run_id, img_a, "ws_psnr", ws);
  metrics::append_metric_csv(csv, run_id, img_a, "psnr", ps);
  std::cout << "ws_psnr=" << ws << " psnr=" << ps << "\n";
  return 0;
}

int cmd_pipeline(const pipeline::RunConfig& cfg) {
  auto result = pipeline::run_pipeline(cfg, &std::cout);
  std::cout << "manifest: " << result.manifest_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panosphere: spherical panorama outpainting toolkit"};
  app.require_subcommand(1);

  Cli cli;
  std::string freq_a, freq_b, met_a, met_b, corpus_kind = "complete";
  bool amp_png = false;

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  auto* shmap_cmd = app.add_subcommand("shmap", "write the SH map binary");
  auto* mask_cmd = app.add_subcommand("mask", "write the viewport mask PNG");
  auto* fitcb_cmd = app.add_subcommand("fit-codebook", "fit a codebook");
  fitcb_cmd->add_option("--corpus", corpus_kind, "complete|masked");
  auto* recon_cmd = app.add_subcommand("reconstruct", "round-trip an image");
  auto* fitm_cmd = app.add_subcommand("fit-model", "fit the sequence model");
  auto* outp_cmd = app.add_subcommand("outpaint", "stage-I outpainting only");
  auto* freq_cmd = app.add_subcommand("freq-report", "frequency gap report");
  freq_cmd->add_option("image_a", freq_a, "first PNG")->required();
  freq_cmd->add_option("image_b", freq_b, "second PNG")->required();
  freq_cmd->add_flag("--amp-png", amp_png, "also write centered amplitude PNGs");
  auto* met_cmd = app.add_subcommand("metrics", "PSNR / WS-PSNR of two PNGs");
  met_cmd->add_option("image_a", met_a, "first PNG")->required();
  met_cmd->add_option("image_b", met_b, "second PNG")->required();
  auto* pipe_cmd = app.add_subcommand("pipeline", "full end-to-end run");

  for (auto* cmd : {synth_cmd, shmap_cmd, mask_cmd, fitcb_cmd, recon_cmd,
                    fitm_cmd, outp_cmd, freq_cmd, met_cmd, pipe_cmd})
    add_common_flags(cmd, cli);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    CLI::App* active = app.get_subcommands().front();
    pipeline::RunConfig cfg = resolve_config(active, cli, args);
    if (active == synth_cmd) return cmd_synth(cfg);
    if (active == shmap_cmd) return cmd_shmap(cfg);
    if (active == mask_cmd) return cmd_mask(cfg);
    if (active == fitcb_cmd) return cmd_fit_codebook(cfg, corpus_kind);
    if (active == recon_cmd) return cmd_reconstruct(cfg);
    if (active == fitm_cmd) return cmd_fit_model(cfg);
    if (active == outp_cmd) return cmd_outpaint(cfg);
    if (active == freq_cmd) return cmd_freq_report(cfg, freq_a, freq_b, amp_png);
    if (active == met_cmd) return cmd_metrics(cfg, met_a, met_b);
    if (active == pipe_cmd) return cmd_pipeline(cfg);
    return 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::out_of_range& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
