#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "uwimg/pgm_io.hpp"
#include "uwimg/pipeline.hpp"

using namespace uwimg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "uwimg_unit";
  fs::create_directories(p);
  return p;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream f(p, std::ios::trunc);
  f << text;
  return p;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
}

const char* kMinimalScene = R"({
  "width": 64, "height": 64,
  "bands": ["VIS", "NIR"],
  "light": {"power": {"VIS": 1.0, "NIR": 1.0}},
  "background": {"material": "black_background", "distance_m": 1.0},
  "objects": [
    {"name": "marker", "material": "chessboard_marker",
     "rect": [8, 8, 48, 48], "distance_m": 0.4, "z_order": 1}
  ]
})";

std::string fixture_config() {
  return std::string(UWIMG_DATA_DIR) + "/pipeline_default.json";
}

std::vector<std::string> issues_of(const std::string& config_text) {
  const fs::path p = write_file("bad_config.json", config_text);
  try {
    load_config(p.string());
  } catch (const ConfigError& e) {
    return e.issues;
  }
  return {};
}

bool any_mentions(const std::vector<std::string>& issues,
                  const std::string& needle) {
  for (const auto& i : issues)
    if (i.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("pgm encoding is byte-exact") {
  GrayImage img(2, 1);
  img.pixels = {0, 255};
  const std::vector<std::uint8_t> bytes = encode_pgm(img);
  const std::vector<std::uint8_t> want{'P', '5', '\n', '2', ' ', '1',
                                       '\n', '2', '5', '5', '\n', 0, 255};
  CHECK(bytes == want);
  CHECK(bytes.size() == 13);
  const GrayImage back = decode_pgm(bytes);
  CHECK(back.width == 2);
  CHECK(back.height == 1);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("pgm files round-trip through disk") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> d(0, 255);
  GrayImage img(37, 23);
  for (auto& p : img.pixels) p = std::uint8_t(d(rng));
  const fs::path p = scratch_dir() / "roundtrip.pgm";
  write_pgm(img, p.string());
  const GrayImage back = read_pgm(p.string());
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("pgm decoder accepts header comments") {
  const std::string text = "P5\n# camera A\n2 1\n255\n";
  std::vector<std::uint8_t> data(text.begin(), text.end());
  data.push_back(7);
  data.push_back(9);
  const GrayImage img = decode_pgm(data);
  CHECK(img.width == 2);
  CHECK(int(img.pixels[0]) == 7);
}

TEST_CASE("pgm decoder reports precise failure offsets") {
  const std::string good = "P5\n2 2\n255\n";

  std::vector<std::uint8_t> magic{'P', '4', '\n'};
  try {
    decode_pgm(magic);
    FAIL("expected PgmFormatError");
  } catch (const PgmFormatError& e) {
    CHECK(e.byte_offset == 0);
  }

  const std::string deep = "P5\n4 3\n65535\n";
  std::vector<std::uint8_t> data(deep.begin(), deep.end());
  data.resize(deep.size() + 12, 0);
  try {
    decode_pgm(data);
    FAIL("expected PgmFormatError");
  } catch (const PgmFormatError& e) {
    CHECK(e.byte_offset == 7);  // position of the maxval token
    CHECK(std::string(e.what()).find("byte 7") != std::string::npos);
  }

  std::vector<std::uint8_t> truncated(good.begin(), good.end());
  truncated.insert(truncated.end(), {1, 2, 3});
  try {
    decode_pgm(truncated);
    FAIL("expected PgmFormatError");
  } catch (const PgmFormatError& e) {
    CHECK(e.byte_offset == truncated.size());
    CHECK(e.detail.find("truncated") != std::string::npos);
  }

  std::vector<std::uint8_t> trailing(good.begin(), good.end());
  trailing.insert(trailing.end(), {1, 2, 3, 4, 5});
  try {
    decode_pgm(trailing);
    FAIL("expected PgmFormatError");
  } catch (const PgmFormatError& e) {
    CHECK(e.byte_offset == 15);  // first byte past the 2x2 payload
    CHECK(e.detail.find("trailing") != std::string::npos);
  }

  const std::string zero = "P5\n0 2\n255\n";
  CHECK_THROWS_AS(decode_pgm({zero.begin(), zero.end()}), PgmFormatError);
}

TEST_CASE("bundled pipeline configuration loads") {
  unsetenv("UWIMG_OUT_DIR");
  const PipelineConfig cfg = load_config(fixture_config());
  CHECK(cfg.scene.width == 256);
  CHECK(cfg.scene.height == 256);
  CHECK(cfg.scene.objects.size() == 7);
  CHECK(cfg.registration.enabled);
  CHECK(cfg.registration.board_cols == 5);
  CHECK(cfg.fusion.mode == "plant_mask");
  CHECK(cfg.water.has_band("NIR"));
  CHECK_FALSE(cfg.acquisition.nir_misalignment.is_identity());
}

TEST_CASE("the output directory honors the environment override") {
  setenv("UWIMG_OUT_DIR", "/tmp/uwimg_env_dir", 1);
  const PipelineConfig cfg = load_config(fixture_config());
  CHECK(cfg.out_dir == "/tmp/uwimg_env_dir");
  unsetenv("UWIMG_OUT_DIR");
  const PipelineConfig plain = load_config(fixture_config());
  CHECK(plain.out_dir == "out");
}

TEST_CASE("water presets resolve by name") {
  CHECK(water_preset("natural").has_band("VIS"));
  CHECK(water_preset("clear").has_band("NIR"));
  CHECK_THROWS_AS(water_preset("murky"), ConfigError);
}

TEST_CASE("config loading aggregates every violation") {
  write_file("scene_min.json", kMinimalScene);
  const auto issues = issues_of(R"({
    "scene": "scene_min.json",
    "water": {"phase_g": 0.0, "bands": {
      "VIS": {"absorption": 0.18, "scattering": 0.55, "ambient_veiling": 0.5},
      "NIR": {"absorption": 1.4, "scattering": 0.1, "ambient_veiling": 0.2}
    }},
    "analysis": {"canny_t_low": 50, "canny_t_high": 40},
    "fusion": {"delta": -3},
    "acquisition": {"gain": -10}
  })");
  CHECK(issues.size() >= 3);
  CHECK(any_mentions(issues, "canny_t_low"));
  CHECK(any_mentions(issues, "delta"));
  CHECK(any_mentions(issues, "gain"));
}

TEST_CASE("a declared band without water coefficients is rejected by name") {
  write_file("scene_min.json", kMinimalScene);
  const auto issues = issues_of(R"({
    "scene": "scene_min.json",
    "water": {"phase_g": 0.0, "waive_orderings": true, "bands": {
      "VIS": {"absorption": 0.18, "scattering": 0.55, "ambient_veiling": 0.5}
    }}
  })");
  REQUIRE_FALSE(issues.empty());
  CHECK(any_mentions(issues, "NIR"));
}

TEST_CASE("band ordering violations surface unless waived") {
  write_file("scene_min.json", kMinimalScene);
  const std::string swapped_water = R"("water": {"phase_g": 0.0, %W "bands": {
      "VIS": {"absorption": 1.4, "scattering": 0.1, "ambient_veiling": 0.2},
      "NIR": {"absorption": 0.18, "scattering": 0.55, "ambient_veiling": 0.5}
    }})";
  auto config_with = [&](const std::string& waive) {
    std::string w = swapped_water;
    w.replace(w.find("%W"), 2, waive);
    return std::string("{\"scene\": \"scene_min.json\", ") + w + "}";
  };
  CHECK(any_mentions(issues_of(config_with("")), "waive_orderings"));
  CHECK(issues_of(config_with("\"waive_orderings\": true,")).empty());
}

TEST_CASE("fusion and registration parameters are validated") {
  write_file("scene_min.json", kMinimalScene);
  CHECK(any_mentions(issues_of(R"({"scene": "scene_min.json",
    "fusion": {"mode": "weight_map"}})"),
                     "weight_map_path"));
  CHECK(any_mentions(issues_of(R"({"scene": "scene_min.json",
    "fusion": {"mode": "other"}})"),
                     "fusion.mode"));
  CHECK(any_mentions(issues_of(R"({"scene": "scene_min.json",
    "registration": {"marker_object": "ghost"}})"),
                     "ghost"));
  CHECK(any_mentions(issues_of(R"({"scene": "scene_min.json",
    "water": {"preset": "briny"}})"),
                     "preset"));
  CHECK(any_mentions(issues_of(R"({"scene": "nope_does_not_exist.json"})"),
                     "cannot open"));
}

TEST_CASE("misalignment accepts a raw matrix or pose parameters") {
  write_file("scene_min.json", kMinimalScene);
  const fs::path mp = write_file("cfg_matrix.json", R"({
    "scene": "scene_min.json",
    "acquisition": {"nir_misalignment": {"matrix": [1,0,5, 0,1,3, 0,0,1]}}
  })");
  const PipelineConfig mc = load_config(mp.string());
  CHECK(mc.acquisition.nir_misalignment.m ==
        Homography::translation(5.0, 3.0).m);

  const fs::path pp = write_file("cfg_pose.json", R"({
    "scene": "scene_min.json",
    "acquisition": {"nir_misalignment": {"dx": 2.0, "dy": 1.0}}
  })");
  const PipelineConfig pc = load_config(pp.string());
  CHECK(pc.acquisition.nir_misalignment.m ==
        Homography::translation(2.0, 1.0).m);

  CHECK(any_mentions(issues_of(R"({"scene": "scene_min.json",
    "acquisition": {"nir_misalignment": {"matrix": [1,2,3]}}})"),
                     "matrix"));
}

TEST_CASE("full pipeline run passes its claims and is reproducible") {
  unsetenv("UWIMG_OUT_DIR");
  PipelineConfig cfg = load_config(fixture_config());
  const fs::path out1 = scratch_dir() / "run1";
  const fs::path out2 = scratch_dir() / "run2";
  fs::remove_all(out1);
  fs::remove_all(out2);

  cfg.out_dir = out1.string();
  const RunReport report = run_pipeline(cfg);
  CHECK(report.claims.size() == 7);
  CHECK(report.all_claims_pass());
  CHECK(report.registration.performed);
  CHECK(report.registration.truth_rms >= 0.0);
  CHECK(report.registration.truth_rms < 0.5);
  CHECK(report.plant_mask_iou >= 0.8);

  const std::vector<std::string> artifacts{
      "vis.pgm",         "nir.pgm",     "plant_truth.pgm", "truth.json",
      "vis_hist.csv",    "nir_hist.csv", "stats.json",     "edges_vis.pgm",
      "edges_nir.pgm",   "overlay.pgm", "nir_registered.pgm", "h_est.json",
      "weight_map.pgm",  "fused.pgm",   "report.json"};
  for (const auto& a : artifacts) CHECK(fs::exists(out1 / a));

  cfg.out_dir = out2.string();
  run_pipeline(cfg);
  for (const auto& a : artifacts) CHECK(slurp(out1 / a) == slurp(out2 / a));
}

TEST_CASE("histogram artifacts carry one row per gray level") {
  const fs::path out = scratch_dir() / "run1";
  if (!fs::exists(out / "vis_hist.csv")) {
    PipelineConfig cfg = load_config(fixture_config());
    cfg.out_dir = out.string();
    run_pipeline(cfg);
  }
  std::ifstream f(out / "vis_hist.csv");
  std::string line;
  REQUIRE(std::getline(f, line));
  CHECK(line == "value,count");
  long long rows = 0, total = 0;
  while (std::getline(f, line)) {
    ++rows;
    total += std::stoll(line.substr(line.find(',') + 1));
  }
  CHECK(rows == 256);
  CHECK(total == 256 * 256);
}

TEST_CASE("fusion refuses unregistered misaligned inputs") {
  unsetenv("UWIMG_OUT_DIR");
  PipelineConfig cfg = load_config(fixture_config());
  cfg.registration.enabled = false;
  cfg.out_dir = (scratch_dir() / "run_disabled").string();
  fs::remove_all(cfg.out_dir);
  try {
    run_pipeline(cfg);
    FAIL("expected PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.stage == "fuse");
    CHECK(std::string(e.what()).find("unregistered") != std::string::npos);
  }
}

TEST_CASE("aligned channels may skip registration") {
  unsetenv("UWIMG_OUT_DIR");
  PipelineConfig cfg = load_config(fixture_config());
  cfg.registration.enabled = false;
  cfg.acquisition.nir_misalignment = Homography::identity();
  cfg.out_dir = (scratch_dir() / "run_noreg").string();
  fs::remove_all(cfg.out_dir);
  const RunReport report = run_pipeline(cfg);
  CHECK_FALSE(report.registration.performed);
  CHECK(fs::exists(fs::path(cfg.out_dir) / "fused.pgm"));
  CHECK_FALSE(fs::exists(fs::path(cfg.out_dir) / "nir_registered.pgm"));
}

TEST_CASE("stats artifact agrees with the emitted images") {
  const fs::path out = scratch_dir() / "run1";
  if (!fs::exists(out / "stats.json")) {
    PipelineConfig cfg = load_config(fixture_config());
    cfg.out_dir = out.string();
    run_pipeline(cfg);
  }
  const njson stats = detail::read_json(out / "stats.json");
  const GrayImage vis = read_pgm((out / "vis.pgm").string());
  const RegionStats s = region_stats(vis, Rect{0, 0, vis.width, vis.height});
  CHECK(stats.at("bands").at("vis").at("mean").get<double>() ==
        Catch::Approx(s.mean).margin(1e-9));
  CHECK(stats.at("bands").at("vis").at("max").get<int>() == s.max);
}
