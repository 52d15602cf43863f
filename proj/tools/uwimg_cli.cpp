// Command-line front end: simulation, analysis, enhancement, registration
// and fusion of dual-band underwater image pairs.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uwimg/uwimg.hpp"

namespace {

using uwimg::njson;

void add_version(CLI::App* app) {
  app->set_version_flag("--version", UWIMG_VERSION);
}

uwimg::PipelineConfig load_with_overrides(const std::string& config_path,
                                          const std::string& out_dir,
                                          long long seed) {
  uwimg::PipelineConfig cfg = uwimg::load_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed >= 0) cfg.acquisition.seed = static_cast<std::uint64_t>(seed);
  return cfg;
}

int cmd_water_report(const std::string& preset,
                     const std::vector<double>& distances) {
  const uwimg::WaterBody w = uwimg::water_preset(preset);
  std::cout << "r_m,band,T_percent\n";
  for (double r : distances) {
    for (const auto& [name, optics] : w.bands) {
      const double c = uwimg::beam_attenuation(optics.coefficients);
      char line[96];
      std::snprintf(line, sizeof(line), "%.2f,%s,%.6f\n", r, name.c_str(),
                    uwimg::transmission(c, r));
      std::cout << line;
    }
  }
  return 0;
}

int cmd_scene_materials() {
  std::cout << "name,rho_vis,rho_nir,pattern,pattern_contrast_vis,"
               "pattern_contrast_nir,pattern_scale\n";
  for (const auto& m : uwimg::builtin_materials()) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%g,%g,%s,%g,%g,%g\n",
                  m.name.c_str(), m.rho_vis, m.rho_nir,
                  uwimg::pattern_name(m.pattern).c_str(),
                  m.pattern_contrast_vis, m.pattern_contrast_nir,
                  m.pattern_scale);
    std::cout << line;
  }
  return 0;
}

int cmd_enhance(const std::string& input, const std::string& output,
                const std::string& method, int tile, double clip,
                double p_low, double p_high, double cutoff, double gamma_low,
                double gamma_high) {
  const uwimg::GrayImage img = uwimg::read_pgm(input);
  uwimg::GrayImage out;
  if (method == "equalize") {
    out = uwimg::equalize_global(img);
  } else if (method == "clahe") {
    out = uwimg::equalize_local(img, tile, clip);
  } else if (method == "stretch") {
    out = uwimg::contrast_stretch(img, p_low, p_high);
  } else if (method == "homomorphic") {
    out = uwimg::homomorphic_filter(img, cutoff, gamma_low, gamma_high);
  } else {
    throw std::invalid_argument("unknown method '" + method + "'");
  }
  uwimg::write_pgm(out, output);
  return 0;
}

int cmd_pipeline(const uwimg::PipelineConfig& cfg) {
  const uwimg::RunReport report = uwimg::run_pipeline(cfg);
  for (const auto& c : report.claims)
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "\n";
  std::cout << "report: " << cfg.out_dir << "/report.json\n";
  return report.all_claims_pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-band (VIS/NIR) underwater imaging toolkit"};
  add_version(&app);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long long seed = -1;

  auto* water = app.add_subcommand("water", "water optics queries");
  add_version(water);
  water->require_subcommand(1);
  std::string preset = "natural";
  std::vector<double> distances{0.3, 0.6, 0.9, 1.2};
  auto* water_report =
      water->add_subcommand("report", "per-band coefficients and transmission");
  add_version(water_report);
  water_report->add_option("--preset", preset, "natural or clear")
      ->capture_default_str();
  water_report->add_option("--distances", distances,
                           "path lengths in meters")
      ->expected(1, 16);

  auto* scene = app.add_subcommand("scene", "scene model queries");
  add_version(scene);
  scene->require_subcommand(1);
  auto* scene_materials =
      scene->add_subcommand("materials", "builtin material catalog as CSV");
  add_version(scene_materials);

  auto add_config_opts = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("--config", config_path, "pipeline config JSON")
        ->required();
    sub->add_option("--out-dir", out_dir, "output directory override");
    if (with_seed) sub->add_option("--seed", seed, "acquisition seed override");
  };

  auto* simulate =
      app.add_subcommand("simulate", "render and acquire the channel pair");
  add_version(simulate);
  add_config_opts(simulate, true);

  auto* analyze = app.add_subcommand(
      "analyze", "histograms, region statistics, edge maps and overlay");
  add_version(analyze);
  add_config_opts(analyze, false);

  std::string in_path, out_path, method = "equalize";
  int tile = 32;
  double clip = 0.5, p_low = 1.0, p_high = 99.0;
  double cutoff = 4.0, gamma_low = 0.5, gamma_high = 1.5;
  auto* enhance = app.add_subcommand("enhance", "single-image enhancement");
  add_version(enhance);
  enhance->add_option("--input", in_path, "input PGM")->required();
  enhance->add_option("--output", out_path, "output PGM")->required();
  enhance
      ->add_option("--method", method,
                   "equalize | clahe | stretch | homomorphic")
      ->capture_default_str();
  enhance->add_option("--tile", tile, "clahe tile size")->capture_default_str();
  enhance->add_option("--clip", clip, "clahe clip limit fraction")
      ->capture_default_str();
  enhance->add_option("--p-low", p_low, "stretch lower percentile")
      ->capture_default_str();
  enhance->add_option("--p-high", p_high, "stretch upper percentile")
      ->capture_default_str();
  enhance->add_option("--cutoff", cutoff, "homomorphic cutoff (cycles/image)")
      ->capture_default_str();
  enhance->add_option("--gamma-low", gamma_low, "homomorphic low-band gain")
      ->capture_default_str();
  enhance->add_option("--gamma-high", gamma_high, "homomorphic high-band gain")
      ->capture_default_str();

  auto* reg = app.add_subcommand(
      "register", "marker-based NIR-to-VIS registration");
  add_version(reg);
  add_config_opts(reg, false);

  auto* fuse = app.add_subcommand("fuse", "weighted NIR/VIS fusion");
  add_version(fuse);
  add_config_opts(fuse, false);

  auto* pipeline = app.add_subcommand(
      "pipeline", "simulate, analyze, register and fuse; check findings");
  add_version(pipeline);
  add_config_opts(pipeline, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (water_report->parsed()) return cmd_water_report(preset, distances);
    if (scene_materials->parsed()) return cmd_scene_materials();
    if (simulate->parsed()) {
      const auto cfg = load_with_overrides(config_path, out_dir, seed);
      uwimg::stage_simulate(cfg, cfg.out_dir);
      return 0;
    }
    if (analyze->parsed()) {
      const auto cfg = load_with_overrides(config_path, out_dir, seed);
      uwimg::stage_analyze(cfg, cfg.out_dir);
      return 0;
    }
    if (enhance->parsed())
      return cmd_enhance(in_path, out_path, method, tile, clip, p_low, p_high,
                         cutoff, gamma_low, gamma_high);
    if (reg->parsed()) {
      const auto cfg = load_with_overrides(config_path, out_dir, seed);
      const auto outcome = uwimg::stage_register(cfg, cfg.out_dir);
      if (outcome.performed)
        std::cout << "corner_rms_px: " << outcome.corner_rms << "\n";
      else
        std::cout << "registration disabled in config\n";
      return 0;
    }
    if (fuse->parsed()) {
      const auto cfg = load_with_overrides(config_path, out_dir, seed);
      uwimg::stage_fuse(cfg, cfg.out_dir);
      return 0;
    }
    if (pipeline->parsed())
      return cmd_pipeline(load_with_overrides(config_path, out_dir, seed));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
