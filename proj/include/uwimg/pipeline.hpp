#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwimg/geometry.hpp"
#include "uwimg/image.hpp"
#include "uwimg/image_ops.hpp"
#include "uwimg/pgm_io.hpp"
#include "uwimg/registration_fusion.hpp"
#include "uwimg/renderer.hpp"
#include "uwimg/scene_model.hpp"
#include "uwimg/water_optics.hpp"

namespace uwimg {

using njson = nlohmann::json;

// Carries every violation found while loading a config, each tagged with a
// JSON-ish path.
struct ConfigError : std::runtime_error {
  std::vector<std::string> issues;

  explicit ConfigError(std::vector<std::string> list)
      : std::runtime_error(join(list)), issues(std::move(list)) {}

 private:
  static std::string join(const std::vector<std::string>& list) {
    std::string s = "invalid configuration:";
    for (const auto& i : list) s += "\n  " + i;
    return s;
  }
};

struct PipelineError : std::runtime_error {
  std::string stage;

  PipelineError(std::string stage_name, const std::string& message)
      : std::runtime_error(stage_name + ": " + message),
        stage(std::move(stage_name)) {}
};

namespace detail {

inline njson parse_json_file(const std::string& path,
                             std::vector<std::string>& issues) {
  std::ifstream f(path);
  if (!f) {
    issues.push_back(path + ": cannot open");
    return njson();
  }
  try {
    return njson::parse(f);
  } catch (const njson::parse_error& e) {
    issues.push_back(path + ": " + e.what());
    return njson();
  }
}

inline double get_num(const njson& j, const std::string& key, double dflt,
                      std::vector<std::string>& issues,
                      const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  if (!j[key].is_number()) {
    issues.push_back(where + "." + key + ": expected a number");
    return dflt;
  }
  return j[key].get<double>();
}

inline std::string get_str(const njson& j, const std::string& key,
                           const std::string& dflt,
                           std::vector<std::string>& issues,
                           const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  if (!j[key].is_string()) {
    issues.push_back(where + "." + key + ": expected a string");
    return dflt;
  }
  return j[key].get<std::string>();
}

inline bool get_bool(const njson& j, const std::string& key, bool dflt,
                     std::vector<std::string>& issues,
                     const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  if (!j[key].is_boolean()) {
    issues.push_back(where + "." + key + ": expected a boolean");
    return dflt;
  }
  return j[key].get<bool>();
}

}  // namespace detail

inline WaterBody water_preset(const std::string& name) {
  if (name == "natural") return natural_water();
  if (name == "clear") return clear_water();
  throw ConfigError({"water.preset: unknown preset '" + name +
                     "' (expected natural or clear)"});
}

// Water from JSON: {"preset": "natural"} or inline bands:
// {"phase_g": 0.0, "bands": {"VIS": {"absorption": a, "scattering": b,
//  "ambient_veiling": v}, ...}}
inline WaterBody load_water(const njson& j, std::vector<std::string>& issues,
                            const std::string& where) {
  if (j.is_object() && j.contains("preset")) {
    const std::string name =
        detail::get_str(j, "preset", "natural", issues, where);
    if (name == "natural") return natural_water();
    if (name == "clear") return clear_water();
    issues.push_back(where + ".preset: unknown preset '" + name + "'");
    return natural_water();
  }
  WaterBody w;
  const double g = detail::get_num(j, "phase_g", 0.0, issues, where);
  if (!(g > -1.0 && g < 1.0)) {
    issues.push_back(where + ".phase_g: must be in (-1,1)");
  } else {
    w.phase = PhaseFunction{g};
  }
  if (!j.is_object() || !j.contains("bands") || !j["bands"].is_object()) {
    issues.push_back(where + ".bands: expected an object of band entries");
    return w;
  }
  for (const auto& [name, bj] : j["bands"].items()) {
    const std::string bw = where + ".bands." + name;
    const double a = detail::get_num(bj, "absorption", 0.0, issues, bw);
    const double b = detail::get_num(bj, "scattering", 0.0, issues, bw);
    const double v = detail::get_num(bj, "ambient_veiling", 0.0, issues, bw);
    if (a < 0 || b < 0) {
      issues.push_back(bw + ": absorption/scattering must be >= 0");
      continue;
    }
    if (v < 0) {
      issues.push_back(bw + ": ambient_veiling must be >= 0");
      continue;
    }
    w.bands[name] = BandOptics{OpticalCoefficients{a, b}, v};
  }
  return w;
}

namespace detail {

inline Material load_material(const njson& j, std::vector<std::string>& issues,
                              const std::string& where) {
  Material m;
  m.name = get_str(j, "name", "", issues, where);
  if (m.name.empty()) issues.push_back(where + ".name: required");
  m.rho_vis = get_num(j, "rho_vis", 0.0, issues, where);
  m.rho_nir = get_num(j, "rho_nir", 0.0, issues, where);
  const std::string pat = get_str(j, "pattern", "uniform", issues, where);
  try {
    m.pattern = pattern_from_name(pat);
  } catch (const std::invalid_argument&) {
    issues.push_back(where + ".pattern: unknown pattern '" + pat + "'");
  }
  m.pattern_contrast_vis =
      get_num(j, "pattern_contrast_vis", 0.0, issues, where);
  m.pattern_contrast_nir =
      get_num(j, "pattern_contrast_nir", 0.0, issues, where);
  m.pattern_scale = get_num(j, "pattern_scale", 1.0, issues, where);
  return m;
}

inline Rect load_rect(const njson& j, std::vector<std::string>& issues,
                      const std::string& where) {
  if (!j.is_array() || j.size() != 4 ||
      !(j[0].is_number_integer() && j[1].is_number_integer() &&
        j[2].is_number_integer() && j[3].is_number_integer())) {
    issues.push_back(where + ": expected [x, y, w, h] integers");
    return Rect{0, 0, 1, 1};
  }
  return Rect{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(),
              j[3].get<int>()};
}

}  // namespace detail

// Scene from JSON. Materials referenced by name resolve against the builtin
// catalog, optionally extended/overridden by a "materials" array.
inline SceneSpec load_scene(const njson& j, const WaterBody& water,
                            std::vector<std::string>& issues,
                            const std::string& where = "scene") {
  SceneSpec s;
  s.water = water;
  if (!j.is_object()) {
    issues.push_back(where + ": expected an object");
    return s;
  }
  s.width = static_cast<int>(detail::get_num(j, "width", 0, issues, where));
  s.height = static_cast<int>(detail::get_num(j, "height", 0, issues, where));

  std::vector<Material> catalog = builtin_materials();
  if (j.contains("materials")) {
    if (!j["materials"].is_array()) {
      issues.push_back(where + ".materials: expected an array");
    } else {
      std::size_t k = 0;
      for (const auto& mj : j["materials"]) {
        const Material m = detail::load_material(
            mj, issues, where + ".materials[" + std::to_string(k) + "]");
        bool replaced = false;
        for (auto& existing : catalog)
          if (existing.name == m.name) {
            existing = m;
            replaced = true;
          }
        if (!replaced) catalog.push_back(m);
        ++k;
      }
    }
  }

  auto resolve = [&](const std::string& name,
                     const std::string& at) -> Material {
    for (const auto& m : catalog)
      if (m.name == name) return m;
    issues.push_back(at + ": unknown material '" + name + "'");
    return Material{name, 0, 0, SurfacePattern::Uniform, 0, 0, 1.0};
  };

  if (j.contains("bands")) {
    if (!j["bands"].is_array()) {
      issues.push_back(where + ".bands: expected an array");
    } else {
      std::size_t k = 0;
      for (const auto& bj : j["bands"]) {
        const std::string bw = where + ".bands[" + std::to_string(k) + "]";
        if (bj.is_string()) {
          const std::string name = bj.get<std::string>();
          if (name == "VIS")
            s.bands.push_back(vis_band());
          else if (name == "NIR")
            s.bands.push_back(nir_band());
          else
            issues.push_back(bw + ": unknown builtin band '" + name + "'");
        } else if (bj.is_object()) {
          try {
            s.bands.push_back(make_band(
                detail::get_str(bj, "name", "", issues, bw),
                detail::get_num(bj, "lambda_min_nm", 0, issues, bw),
                detail::get_num(bj, "lambda_peak_nm", 0, issues, bw),
                detail::get_num(bj, "lambda_max_nm", 0, issues, bw)));
          } catch (const std::invalid_argument& e) {
            issues.push_back(bw + ": " + e.what());
          }
        } else {
          issues.push_back(bw + ": expected a band name or object");
        }
        ++k;
      }
    }
  } else {
    s.bands = {vis_band(), nir_band()};
  }

  const njson lj = j.value("light", njson::object());
  s.light.colocated = detail::get_bool(lj, "colocated", true, issues,
                                       where + ".light");
  if (lj.contains("power") && lj["power"].is_object()) {
    for (const auto& [band, pv] : lj["power"].items()) {
      if (!pv.is_number()) {
        issues.push_back(where + ".light.power." + band +
                         ": expected a number");
        continue;
      }
      s.light.power[band] = pv.get<double>();
    }
  }

  const njson bj = j.value("background", njson::object());
  s.background.material =
      resolve(detail::get_str(bj, "material", "black_background", issues,
                              where + ".background"),
              where + ".background.material");
  s.background.distance_m = detail::get_num(bj, "distance_m", 1.0, issues,
                                            where + ".background");

  if (!j.contains("objects") || !j["objects"].is_array()) {
    issues.push_back(where + ".objects: required array");
  } else {
    std::size_t k = 0;
    for (const auto& oj : j["objects"]) {
      const std::string ow = where + ".objects[" + std::to_string(k) + "]";
      SceneObject o;
      o.name = detail::get_str(oj, "name", "object" + std::to_string(k),
                               issues, ow);
      o.material = resolve(
          detail::get_str(oj, "material", "", issues, ow), ow + ".material");
      o.rect = detail::load_rect(oj.value("rect", njson::array()), issues,
                                 ow + ".rect");
      o.distance_m = detail::get_num(oj, "distance_m", 0.0, issues, ow);
      o.z_order = static_cast<int>(detail::get_num(oj, "z_order", 0, issues, ow));
      s.objects.push_back(std::move(o));
      ++k;
    }
  }

  for (const auto& issue : validate_scene(s))
    issues.push_back(where + ": " + issue.where + ": " + issue.message);
  return s;
}

struct AnalysisParams {
  double canny_sigma = 1.0;
  double canny_t_low = 20.0;
  double canny_t_high = 40.0;
};

struct RegistrationParams {
  bool enabled = true;
  int board_cols = 5;
  int board_rows = 5;
  std::string marker_object = "marker";
  int roi_margin = 12;
};

struct FusionParams {
  std::string mode = "plant_mask";  // or "weight_map"
  int delta = 12;
  double alpha = 1.0;
  std::string weight_map_path;
};

struct PipelineConfig {
  std::string config_dir;
  std::string scene_path;
  SceneSpec scene;
  WaterBody water;
  AcquisitionModel acquisition;
  AnalysisParams analysis;
  RegistrationParams registration;
  FusionParams fusion;
  std::string out_dir = "out";
};

// Misalignment given as translation + rotation about the image center, or a
// raw row-major 3x3 matrix.
inline Homography load_misalignment(const njson& j, int width, int height,
                                    std::vector<std::string>& issues,
                                    const std::string& where) {
  if (j.is_object() && j.contains("matrix")) {
    const auto& mj = j["matrix"];
    if (!mj.is_array() || mj.size() != 9) {
      issues.push_back(where + ".matrix: expected 9 numbers, row-major");
      return Homography::identity();
    }
    Homography h;
    for (std::size_t i = 0; i < 9; ++i) {
      if (!mj[i].is_number()) {
        issues.push_back(where + ".matrix: expected 9 numbers, row-major");
        return Homography::identity();
      }
      h.m[i] = mj[i].get<double>();
    }
    if (!h.invertible()) {
      issues.push_back(where + ".matrix: not invertible");
      return Homography::identity();
    }
    return h;
  }
  const double dx = detail::get_num(j, "dx", 0.0, issues, where);
  const double dy = detail::get_num(j, "dy", 0.0, issues, where);
  const double rot_deg = detail::get_num(j, "rot_deg", 0.0, issues, where);
  const double angle = rot_deg * std::numbers::pi / 180.0;
  const Homography rot = Homography::rotation_about(
      (width - 1) / 2.0, (height - 1) / 2.0, angle);
  return Homography::translation(dx, dy) * rot;
}

inline PipelineConfig load_config(const std::string& path) {
  std::vector<std::string> issues;
  const njson j = detail::parse_json_file(path, issues);
  if (!issues.empty()) throw ConfigError(issues);

  PipelineConfig cfg;
  const std::filesystem::path cfg_path(path);
  cfg.config_dir = cfg_path.has_parent_path()
                       ? cfg_path.parent_path().string()
                       : std::string(".");

  const njson wj = j.value("water", njson{{"preset", "natural"}});
  cfg.water = load_water(wj, issues, "water");
  if (!detail::get_bool(wj, "waive_orderings", false, issues, "water"))
    for (const auto& v : check_band_orderings(cfg.water))
      issues.push_back("water: " + v +
                       " (set water.waive_orderings to bypass)");

  cfg.scene_path = detail::get_str(j, "scene", "", issues, "config");
  if (cfg.scene_path.empty()) {
    issues.push_back("scene: required (path to scene JSON)");
  } else {
    std::filesystem::path sp(cfg.scene_path);
    if (sp.is_relative()) sp = std::filesystem::path(cfg.config_dir) / sp;
    std::vector<std::string> scene_issues;
    const njson sj = detail::parse_json_file(sp.string(), scene_issues);
    if (scene_issues.empty()) {
      cfg.scene = load_scene(sj, cfg.water, issues, "scene");
    } else {
      issues.insert(issues.end(), scene_issues.begin(), scene_issues.end());
    }
  }

  const njson aj = j.value("acquisition", njson::object());
  cfg.acquisition.gain =
      detail::get_num(aj, "gain", 255.0, issues, "acquisition");
  cfg.acquisition.noise_sigma =
      detail::get_num(aj, "noise_sigma", 0.0, issues, "acquisition");
  cfg.acquisition.seed = static_cast<std::uint64_t>(
      detail::get_num(aj, "seed", 0.0, issues, "acquisition"));
  cfg.acquisition.interface_transmittance = detail::get_num(
      aj, "interface_transmittance", 1.0, issues, "acquisition");
  cfg.acquisition.nir_misalignment =
      load_misalignment(aj.value("nir_misalignment", njson::object()),
                        cfg.scene.width > 0 ? cfg.scene.width : 1,
                        cfg.scene.height > 0 ? cfg.scene.height : 1, issues,
                        "acquisition.nir_misalignment");
  if (!(cfg.acquisition.gain > 0))
    issues.push_back("acquisition.gain: must be positive");
  if (cfg.acquisition.noise_sigma < 0)
    issues.push_back("acquisition.noise_sigma: must be >= 0");
  if (!(cfg.acquisition.interface_transmittance > 0 &&
        cfg.acquisition.interface_transmittance <= 1.0))
    issues.push_back("acquisition.interface_transmittance: must be in (0,1]");

  const njson nj = j.value("analysis", njson::object());
  cfg.analysis.canny_sigma =
      detail::get_num(nj, "canny_sigma", 1.0, issues, "analysis");
  cfg.analysis.canny_t_low =
      detail::get_num(nj, "canny_t_low", 20.0, issues, "analysis");
  cfg.analysis.canny_t_high =
      detail::get_num(nj, "canny_t_high", 40.0, issues, "analysis");
  if (cfg.analysis.canny_sigma < 0)
    issues.push_back("analysis.canny_sigma: must be >= 0");
  if (!(cfg.analysis.canny_t_low > 0 &&
        cfg.analysis.canny_t_low < cfg.analysis.canny_t_high))
    issues.push_back("analysis: requires 0 < canny_t_low < canny_t_high");

  const njson rj = j.value("registration", njson::object());
  cfg.registration.enabled =
      detail::get_bool(rj, "enabled", true, issues, "registration");
  cfg.registration.board_cols = static_cast<int>(
      detail::get_num(rj, "board_cols", 5, issues, "registration"));
  cfg.registration.board_rows = static_cast<int>(
      detail::get_num(rj, "board_rows", 5, issues, "registration"));
  cfg.registration.marker_object = detail::get_str(
      rj, "marker_object", "marker", issues, "registration");
  cfg.registration.roi_margin = static_cast<int>(
      detail::get_num(rj, "roi_margin", 12, issues, "registration"));
  if (cfg.registration.board_cols < 2 || cfg.registration.board_rows < 2)
    issues.push_back("registration: board must be at least 2x2 inner corners");
  if (cfg.registration.enabled) {
    bool found = false;
    for (const auto& o : cfg.scene.objects)
      if (o.name == cfg.registration.marker_object) {
        found = true;
        if (o.material.pattern != SurfacePattern::Chessboard)
          issues.push_back("registration.marker_object: object '" + o.name +
                           "' is not chessboard-patterned");
      }
    if (!found && !cfg.scene.objects.empty())
      issues.push_back("registration.marker_object: no scene object named '" +
                       cfg.registration.marker_object + "'");
  }

  const njson fj = j.value("fusion", njson::object());
  cfg.fusion.mode =
      detail::get_str(fj, "mode", "plant_mask", issues, "fusion");
  cfg.fusion.delta =
      static_cast<int>(detail::get_num(fj, "delta", 12, issues, "fusion"));
  cfg.fusion.alpha = detail::get_num(fj, "alpha", 1.0, issues, "fusion");
  cfg.fusion.weight_map_path =
      detail::get_str(fj, "weight_map_path", "", issues, "fusion");
  if (cfg.fusion.mode != "plant_mask" && cfg.fusion.mode != "weight_map")
    issues.push_back("fusion.mode: expected 'plant_mask' or 'weight_map'");
  if (cfg.fusion.mode == "weight_map" && cfg.fusion.weight_map_path.empty())
    issues.push_back("fusion.weight_map_path: required for weight_map mode");
  if (cfg.fusion.delta <= 0) issues.push_back("fusion.delta: must be > 0");
  if (!(cfg.fusion.alpha >= 0.0 && cfg.fusion.alpha <= 1.0))
    issues.push_back("fusion.alpha: must be in [0,1]");

  cfg.out_dir = detail::get_str(j, "out_dir", "out", issues, "config");
  if (const char* env = std::getenv("UWIMG_OUT_DIR"))
    if (*env) cfg.out_dir = env;

  if (!issues.empty()) throw ConfigError(issues);
  return cfg;
}

namespace detail {

inline njson rect_to_json(const Rect& r) {
  return njson::array({r.x, r.y, r.w, r.h});
}

inline Rect rect_from_json(const njson& j) {
  return Rect{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(),
              j.at(3).get<int>()};
}

inline njson homography_to_json(const Homography& h) {
  njson a = njson::array();
  for (double v : h.m) a.push_back(v);
  return a;
}

inline Homography homography_from_json(const njson& j) {
  Homography h;
  for (std::size_t i = 0; i < 9; ++i) h.m[i] = j.at(i).get<double>();
  return h;
}

inline njson stats_to_json(const RegionStats& s) {
  return njson{{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min},
               {"max", s.max}};
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const njson& j) {
  write_text(path, j.dump(2) + "\n");
}

inline njson read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return njson::parse(f);
}

inline void write_histogram_csv(const std::filesystem::path& path,
                                const Histogram& h) {
  std::string csv = "value,count\n";
  for (int v = 0; v < 256; ++v)
    csv += std::to_string(v) + "," + std::to_string(h.bins[static_cast<std::size_t>(v)]) + "\n";
  write_text(path, csv);
}

inline GrayImage edge_to_gray(const EdgeMap& e) {
  GrayImage out(e.width, e.height);
  for (std::size_t i = 0; i < e.mask.size(); ++i)
    out.pixels[i] = e.mask[i] ? 255 : 0;
  return out;
}

}  // namespace detail

// Ground-truth plant mask from the scene description: pixels whose
// front-most object uses a plant material.
inline GrayImage plant_truth_mask(const SceneSpec& scene) {
  const std::vector<int> cover = coverage_map(scene);
  GrayImage out(scene.width, scene.height);
  for (std::size_t i = 0; i < cover.size(); ++i) {
    if (cover[i] < 0) continue;
    const std::string& mat =
        scene.objects[static_cast<std::size_t>(cover[i])].material.name;
    if (mat.rfind("plant", 0) == 0) out.pixels[i] = 255;
  }
  return out;
}

// simulate: acquire the channel pair and write vis.pgm, nir.pgm, truth.json
// (true homography + labeled regions) and the plant ground-truth mask.
inline void stage_simulate(const PipelineConfig& cfg,
                           const std::filesystem::path& out) {
  try {
    std::filesystem::create_directories(out);
    const AcquiredPair pair =
        acquire_pair(cfg.scene, cfg.water, cfg.acquisition);
    write_pgm(pair.vis, (out / "vis.pgm").string());
    write_pgm(pair.nir, (out / "nir.pgm").string());
    write_pgm(plant_truth_mask(cfg.scene), (out / "plant_truth.pgm").string());

    njson truth;
    truth["true_h"] = detail::homography_to_json(pair.true_h);
    truth["board"] = njson{{"cols", cfg.registration.board_cols},
                           {"rows", cfg.registration.board_rows},
                           {"object", cfg.registration.marker_object}};
    truth["plant_truth"] = "plant_truth.pgm";
    njson regions = njson::array();
    for (const auto& o : cfg.scene.objects)
      regions.push_back(njson{{"name", o.name},
                              {"material", o.material.name},
                              {"distance_m", o.distance_m},
                              {"z_order", o.z_order},
                              {"rect", detail::rect_to_json(o.rect)}});
    truth["regions"] = regions;
    detail::write_json(out / "truth.json", truth);
  } catch (const ConfigurationError& e) {
    throw PipelineError("simulate", e.what());
  }
}

// analyze: histograms, per-region statistics, shared-threshold edge maps and
// the NIR/VIS overlay. Reads only simulate's files.
inline njson stage_analyze(const PipelineConfig& cfg,
                           const std::filesystem::path& out) {
  GrayImage vis, nir;
  njson truth;
  try {
    vis = read_pgm((out / "vis.pgm").string());
    nir = read_pgm((out / "nir.pgm").string());
    truth = detail::read_json(out / "truth.json");
  } catch (const std::exception& e) {
    throw PipelineError("analyze", e.what());
  }

  detail::write_histogram_csv(out / "vis_hist.csv", histogram(vis));
  detail::write_histogram_csv(out / "nir_hist.csv", histogram(nir));

  const EdgeMap ev = canny(vis, cfg.analysis.canny_sigma,
                           cfg.analysis.canny_t_low, cfg.analysis.canny_t_high);
  const EdgeMap en = canny(nir, cfg.analysis.canny_sigma,
                           cfg.analysis.canny_t_low, cfg.analysis.canny_t_high);
  const OverlayMap overlay = edge_overlay(en, ev);
  write_pgm(detail::edge_to_gray(ev), (out / "edges_vis.pgm").string());
  write_pgm(detail::edge_to_gray(en), (out / "edges_nir.pgm").string());
  write_pgm(overlay_to_gray(overlay), (out / "overlay.pgm").string());

  njson stats;
  stats["bands"] = njson{
      {"vis", detail::stats_to_json(region_stats(
                  vis, Rect{0, 0, vis.width, vis.height}))},
      {"nir", detail::stats_to_json(region_stats(
                  nir, Rect{0, 0, nir.width, nir.height}))}};
  njson regions = njson::array();
  for (const auto& rj : truth.at("regions")) {
    const Rect r = detail::rect_from_json(rj.at("rect"));
    const OverlayCounts c = edge_counts(overlay, r);
    regions.push_back(
        njson{{"name", rj.at("name")},
              {"material", rj.at("material")},
              {"rect", rj.at("rect")},
              {"vis", detail::stats_to_json(region_stats(vis, r))},
              {"nir", detail::stats_to_json(region_stats(nir, r))},
              {"edges",
               njson{{"nir_only", c.nir_only},
                     {"vis_only", c.vis_only},
                     {"both", c.both},
                     {"none", c.none}}}});
  }
  stats["regions"] = regions;
  detail::write_json(out / "stats.json", stats);
  return stats;
}

struct RegisterOutcome {
  bool performed = false;
  Homography h_est;
  double corner_rms = -1.0;   // estimator reprojection RMS over corners
  double truth_rms = -1.0;    // |H_est p - H_true p| RMS over NIR corners
};

// register: marker-based NIR->VIS homography; writes nir_registered.pgm and
// h_est.json (9 numbers, row-major).
inline RegisterOutcome stage_register(const PipelineConfig& cfg,
                                      const std::filesystem::path& out) {
  RegisterOutcome outcome;
  if (!cfg.registration.enabled) return outcome;

  GrayImage vis, nir;
  njson truth;
  try {
    vis = read_pgm((out / "vis.pgm").string());
    nir = read_pgm((out / "nir.pgm").string());
    truth = detail::read_json(out / "truth.json");
  } catch (const std::exception& e) {
    throw PipelineError("register", e.what());
  }

  std::optional<Rect> roi;
  for (const auto& rj : truth.at("regions"))
    if (rj.at("name").get<std::string>() == cfg.registration.marker_object)
      roi = detail::rect_from_json(rj.at("rect"));

  RegistrationResult res;
  try {
    res = register_pair(vis, nir, cfg.registration.board_cols,
                        cfg.registration.board_rows, roi,
                        cfg.registration.roi_margin);
  } catch (const RegistrationError& e) {
    throw PipelineError("register", e.what());
  }

  write_pgm(res.nir_registered, (out / "nir_registered.pgm").string());
  detail::write_json(out / "h_est.json",
                     detail::homography_to_json(res.h_est));

  outcome.performed = true;
  outcome.h_est = res.h_est;
  outcome.corner_rms = res.corner_rms;
  if (truth.contains("true_h")) {
    const Homography ht = detail::homography_from_json(truth["true_h"]);
    double se = 0.0;
    for (const auto& p : res.corners_nir) {
      const Point a = res.h_est.apply(p);
      const Point b = ht.apply(p);
      se += (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
    }
    outcome.truth_rms =
        std::sqrt(se / static_cast<double>(res.corners_nir.size()));
  }
  return outcome;
}

// fuse: weight map (plant mask or supplied PGM) applied to the registered
// pair. Refuses to run on unregistered inputs when a misalignment exists.
inline void stage_fuse(const PipelineConfig& cfg,
                       const std::filesystem::path& out) {
  GrayImage vis;
  try {
    vis = read_pgm((out / "vis.pgm").string());
  } catch (const std::exception& e) {
    throw PipelineError("fuse", e.what());
  }

  GrayImage nir_reg;
  if (cfg.registration.enabled) {
    try {
      nir_reg = read_pgm((out / "nir_registered.pgm").string());
    } catch (const std::exception& e) {
      throw PipelineError("fuse", e.what());
    }
  } else {
    if (!cfg.acquisition.nir_misalignment.is_identity())
      throw PipelineError(
          "fuse",
          "refusing unregistered inputs: registration is disabled but the "
          "acquisition declares a NIR misalignment");
    try {
      nir_reg = read_pgm((out / "nir.pgm").string());
    } catch (const std::exception& e) {
      throw PipelineError("fuse", e.what());
    }
  }

  WeightMap w;
  if (cfg.fusion.mode == "plant_mask") {
    w = plant_mask(nir_reg, vis, cfg.fusion.delta, cfg.fusion.alpha);
  } else {
    std::filesystem::path wp(cfg.fusion.weight_map_path);
    if (wp.is_relative()) wp = std::filesystem::path(cfg.config_dir) / wp;
    try {
      w = gray_to_weight_map(read_pgm(wp.string()));
    } catch (const std::exception& e) {
      throw PipelineError("fuse", e.what());
    }
    if (w.width != vis.width || w.height != vis.height)
      throw PipelineError("fuse", "weight map dimensions differ from images");
  }
  write_pgm(weight_map_to_gray(w), (out / "weight_map.pgm").string());
  write_pgm(fuse_weighted(vis, nir_reg, w), (out / "fused.pgm").string());
}

struct ClaimResult {
  std::string name;
  std::string description;
  bool pass = false;
  njson details;
};

struct RunReport {
  njson band_stats;
  njson region_stats;
  RegisterOutcome registration;
  double plant_mask_iou = -1.0;
  std::vector<ClaimResult> claims;

  bool all_claims_pass() const {
    for (const auto& c : claims)
      if (!c.pass) return false;
    return true;
  }
};

inline njson report_to_json(const RunReport& r) {
  njson j;
  j["bands"] = r.band_stats;
  j["regions"] = r.region_stats;
  njson reg;
  reg["performed"] = r.registration.performed;
  if (r.registration.performed) {
    reg["h_est"] = detail::homography_to_json(r.registration.h_est);
    reg["corner_rms_px"] = r.registration.corner_rms;
    reg["truth_rms_px"] = r.registration.truth_rms;
  }
  j["registration"] = reg;
  if (r.plant_mask_iou >= 0.0) j["plant_mask_iou"] = r.plant_mask_iou;
  njson claims = njson::array();
  for (const auto& c : r.claims)
    claims.push_back(njson{{"name", c.name},
                           {"description", c.description},
                           {"pass", c.pass},
                           {"details", c.details}});
  j["claims"] = claims;
  j["all_claims_pass"] = r.all_claims_pass();
  return j;
}

namespace detail {

struct NamedRegion {
  std::string name;
  std::string material;
  Rect rect;
};

inline std::vector<NamedRegion> regions_from_truth(const njson& truth) {
  std::vector<NamedRegion> out;
  for (const auto& rj : truth.at("regions"))
    out.push_back({rj.at("name").get<std::string>(),
                   rj.at("material").get<std::string>(),
                   rect_from_json(rj.at("rect"))});
  return out;
}

}  // namespace detail

// Full run: simulate -> analyze -> register -> fuse, then evaluate the
// qualitative observations the tank experiment reported, from the emitted
// files only.
inline RunReport run_pipeline(const PipelineConfig& cfg) {
  const std::filesystem::path out(cfg.out_dir);
  stage_simulate(cfg, out);
  const njson stats = stage_analyze(cfg, out);
  const RegisterOutcome reg = stage_register(cfg, out);
  stage_fuse(cfg, out);

  RunReport report;
  report.band_stats = stats.at("bands");
  report.region_stats = stats.at("regions");
  report.registration = reg;

  GrayImage vis, nir, fused, weight_gray, truth_mask;
  njson truth;
  try {
    vis = read_pgm((out / "vis.pgm").string());
    nir = read_pgm((out / "nir.pgm").string());
    fused = read_pgm((out / "fused.pgm").string());
    weight_gray = read_pgm((out / "weight_map.pgm").string());
    truth_mask = read_pgm((out / "plant_truth.pgm").string());
    truth = detail::read_json(out / "truth.json");
  } catch (const std::exception& e) {
    throw PipelineError("report", e.what());
  }
  const std::vector<detail::NamedRegion> regions =
      detail::regions_from_truth(truth);

  auto find_by_material = [&](const std::string& mat)
      -> std::optional<detail::NamedRegion> {
    for (const auto& r : regions)
      if (r.material == mat) return r;
    return std::nullopt;
  };

  const EdgeMap ev = canny(vis, cfg.analysis.canny_sigma,
                           cfg.analysis.canny_t_low, cfg.analysis.canny_t_high);
  const EdgeMap en = canny(nir, cfg.analysis.canny_sigma,
                           cfg.analysis.canny_t_low, cfg.analysis.canny_t_high);
  const OverlayMap overlay = edge_overlay(en, ev);

  // Less light comes back in the strongly absorbed band.
  {
    const RegionStats sv =
        region_stats(vis, Rect{0, 0, vis.width, vis.height});
    const RegionStats sn =
        region_stats(nir, Rect{0, 0, nir.width, nir.height});
    report.claims.push_back(
        {"nir_less_brightness",
         "NIR frame is darker overall than the VIS frame",
         sn.mean < sv.mean,
         njson{{"vis_mean", sv.mean}, {"nir_mean", sn.mean}}});
  }

  // Stronger scattering brightens the VIS background and flattens contrast.
  if (const auto marker = find_by_material("chessboard_marker")) {
    const RegionStats sv = region_stats(vis, marker->rect);
    const RegionStats sn = region_stats(nir, marker->rect);
    const double cv_vis = sv.mean > 0 ? sv.stddev / sv.mean : 0.0;
    const double cv_nir = sn.mean > 0 ? sn.stddev / sn.mean : 0.0;
    report.claims.push_back(
        {"vis_scattering_lowers_contrast",
         "relative contrast on the marker face is lower in VIS than in NIR",
         cv_vis < cv_nir,
         njson{{"region", marker->name},
               {"vis_contrast", cv_vis},
               {"nir_contrast", cv_nir}}});
  }

  // Vegetation shows more edges under NIR light.
  {
    long long nir_only = 0, vis_only = 0;
    bool found = false;
    njson parts = njson::array();
    for (const auto& r : regions) {
      if (r.material.rfind("plant", 0) != 0) continue;
      found = true;
      const OverlayCounts c = edge_counts(overlay, r.rect);
      nir_only += c.nir_only;
      vis_only += c.vis_only;
      parts.push_back(njson{{"name", r.name},
                            {"nir_only", c.nir_only},
                            {"vis_only", c.vis_only}});
    }
    if (found)
      report.claims.push_back(
          {"plant_more_nir_edges",
           "plant regions yield more NIR-only than VIS-only edge pixels",
           nir_only > vis_only,
           njson{{"nir_only", nir_only},
                 {"vis_only", vis_only},
                 {"regions", parts}}});
  }

  // Dyed fabric pattern is a VIS-only feature.
  if (const auto fabric = find_by_material("fabric_blobs")) {
    const Rect r = fabric->rect.inset(5);
    const OverlayCounts c = edge_counts(overlay, r);
    const long long vis_edges = c.vis_only + c.both;
    const long long nir_edges = c.nir_only + c.both;
    report.claims.push_back(
        {"fabric_pattern_vis_only",
         "fabric blob pattern produces at least tenfold more VIS edge pixels",
         vis_edges > 0 && vis_edges >= 10 * nir_edges,
         njson{{"region", fabric->name},
               {"vis_edges", vis_edges},
               {"nir_edges", nir_edges}}});
  }

  // Black fabric is nearly invisible in VIS yet detectable in NIR.
  if (const auto bf = find_by_material("black_fabric")) {
    const Rect r = bf->rect.inset(3);
    const RegionStats sv = region_stats(vis, r);
    const RegionStats sn = region_stats(nir, r);
    report.claims.push_back(
        {"black_fabric_nir_detectable",
         "black fabric is at least 20 gray levels brighter in NIR",
         sn.mean - sv.mean >= 20.0,
         njson{{"region", bf->name},
               {"vis_mean", sv.mean},
               {"nir_mean", sn.mean}}});
  }

  // Fusion with negative plant weights removes vegetation edges.
  {
    const EdgeMap ef = canny(fused, cfg.analysis.canny_sigma,
                             cfg.analysis.canny_t_low,
                             cfg.analysis.canny_t_high);
    long long vis_edges = 0, fused_edges = 0;
    bool found = false;
    for (const auto& r : regions) {
      if (r.material.rfind("plant", 0) != 0) continue;
      found = true;
      for (int y = r.rect.y; y < r.rect.y + r.rect.h; ++y)
        for (int x = r.rect.x; x < r.rect.x + r.rect.w; ++x) {
          vis_edges += ev.at(x, y);
          fused_edges += ef.at(x, y);
        }
    }
    if (found)
      report.claims.push_back(
          {"fusion_removes_plants",
           "fused image has fewer plant-region edges than the VIS image",
           fused_edges < vis_edges,
           njson{{"vis_edges", vis_edges}, {"fused_edges", fused_edges}}});
  }

  // Plant-mask quality against the simulator's ground truth.
  if (cfg.fusion.mode == "plant_mask") {
    long long inter = 0, uni = 0;
    for (std::size_t i = 0; i < weight_gray.pixels.size(); ++i) {
      const bool masked = byte_to_weight(weight_gray.pixels[i]) < 0.0;
      const bool truth_plant = truth_mask.pixels[i] > 0;
      inter += (masked && truth_plant);
      uni += (masked || truth_plant);
    }
    report.plant_mask_iou =
        uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
    report.claims.push_back(
        {"plant_mask_matches_truth",
         "plant mask overlaps ground truth with IoU of at least 0.8",
         report.plant_mask_iou >= 0.8,
         njson{{"iou", report.plant_mask_iou}}});
  }

  detail::write_json(out / "report.json", report_to_json(report));
  return report;
}

}  // namespace uwimg
