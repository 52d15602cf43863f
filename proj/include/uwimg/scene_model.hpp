#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwimg/image.hpp"
#include "uwimg/water_optics.hpp"

namespace uwimg {

enum class SurfacePattern { Uniform, Chessboard, Stripes, Blobs };

inline std::string pattern_name(SurfacePattern p) {
  switch (p) {
    case SurfacePattern::Uniform: return "uniform";
    case SurfacePattern::Chessboard: return "chessboard";
    case SurfacePattern::Stripes: return "stripes";
    case SurfacePattern::Blobs: return "blobs";
  }
  return "uniform";
}

inline SurfacePattern pattern_from_name(const std::string& s) {
  if (s == "uniform") return SurfacePattern::Uniform;
  if (s == "chessboard") return SurfacePattern::Chessboard;
  if (s == "stripes") return SurfacePattern::Stripes;
  if (s == "blobs") return SurfacePattern::Blobs;
  throw std::invalid_argument("unknown surface pattern: " + s);
}

// Per-band diffuse reflectance plus an optional texture that modulates it.
struct Material {
  std::string name;
  double rho_vis = 0.0;
  double rho_nir = 0.0;
  SurfacePattern pattern = SurfacePattern::Uniform;
  double pattern_contrast_vis = 0.0;
  double pattern_contrast_nir = 0.0;
  double pattern_scale = 1.0;  // cells or blob pitches per unit uv
};

// A frontal planar rectangle at a fixed distance from the camera plane.
struct SceneObject {
  std::string name;
  Material material;
  Rect rect;
  double distance_m = 0.0;
  int z_order = 0;
};

// Relative radiance per band; the source sits at the camera when colocated.
struct LightSource {
  std::map<std::string, double> power;
  bool colocated = true;

  double power_for(const std::string& band) const {
    auto it = power.find(band);
    return it == power.end() ? 1.0 : it->second;
  }
};

struct Background {
  Material material;
  double distance_m = 1.0;
};

struct SceneSpec {
  int width = 0;
  int height = 0;
  std::vector<SceneObject> objects;
  Background background;
  LightSource light;
  WaterBody water;
  std::vector<ChannelBand> bands;
};

// Fixed catalog covering the tank experiment: a chessboard marker, corroded
// and bare metal faces, rubber, two fabric weaves, black fabric, vegetation,
// gravel and a matte black sheet.
inline std::vector<Material> builtin_materials() {
  std::vector<Material> out;
  out.push_back({"chessboard_marker", 0.50, 0.50, SurfacePattern::Chessboard,
                 0.45, 0.45, 6.0});
  out.push_back({"rust_metal", 0.35, 0.40, SurfacePattern::Blobs, 0.12, 0.10,
                 7.0});
  out.push_back({"tinplate", 0.60, 0.65, SurfacePattern::Uniform, 0.0, 0.0,
                 1.0});
  out.push_back({"rubber", 0.15, 0.20, SurfacePattern::Uniform, 0.0, 0.0,
                 1.0});
  // Dyed patterns on fabric read strongly in VIS yet vanish under NIR light.
  out.push_back({"fabric_stripes", 0.45, 0.45, SurfacePattern::Stripes, 0.35,
                 0.0, 8.0});
  out.push_back({"fabric_blobs", 0.45, 0.45, SurfacePattern::Blobs, 0.35, 0.0,
                 5.0});
  out.push_back({"black_fabric", 0.02, 0.45, SurfacePattern::Uniform, 0.0,
                 0.0, 1.0});
  out.push_back({"plant", 0.10, 0.62, SurfacePattern::Blobs, 0.0, 0.15, 5.0});
  out.push_back({"gravel", 0.40, 0.40, SurfacePattern::Blobs, 0.28, 0.28,
                 9.0});
  out.push_back({"black_background", 0.01, 0.01, SurfacePattern::Uniform, 0.0,
                 0.0, 1.0});
  return out;
}

inline const Material& find_material(const std::vector<Material>& catalog,
                                     const std::string& name) {
  for (const auto& m : catalog)
    if (m.name == name) return m;
  throw std::runtime_error("no such material: " + name);
}

// Signed modulation in {-1, +1} (0 for uniform). Patterns tile the unit
// square; indices are clamped so uv = 1 falls in the last cell.
inline double pattern_modulation(SurfacePattern pattern, double u, double v,
                                 double scale) {
  auto cell_index = [scale](double t) {
    long i = static_cast<long>(std::floor(t * scale));
    const long last = static_cast<long>(std::ceil(scale)) - 1;
    return std::clamp(i, 0L, std::max(last, 0L));
  };
  switch (pattern) {
    case SurfacePattern::Uniform:
      return 0.0;
    case SurfacePattern::Chessboard: {
      const long i = cell_index(u);
      const long j = cell_index(v);
      return ((i + j) % 2 == 0) ? 1.0 : -1.0;
    }
    case SurfacePattern::Stripes:
      return (cell_index(u) % 2 == 0) ? 1.0 : -1.0;
    case SurfacePattern::Blobs: {
      // Disks of radius 0.35 on a hex lattice: unit column pitch, row pitch
      // sqrt(3)/2, odd rows shifted by half a column.
      const double px = u * scale;
      const double py = v * scale;
      const double row_pitch = std::sqrt(3.0) / 2.0;
      const long j0 = static_cast<long>(std::lround(py / row_pitch));
      for (long jj = j0 - 1; jj <= j0 + 1; ++jj) {
        const double cy = jj * row_pitch;
        const double off = (((jj % 2) + 2) % 2 == 1) ? 0.5 : 0.0;
        const long i0 = static_cast<long>(std::lround(px - off));
        for (long ii = i0 - 1; ii <= i0 + 1; ++ii) {
          const double cx = ii + off;
          const double dx = px - cx;
          const double dy = py - cy;
          if (dx * dx + dy * dy < 0.35 * 0.35) return 1.0;
        }
      }
      return -1.0;
    }
  }
  return 0.0;
}

// Reflectance of a material point for a band, pattern applied and clamped.
inline double texture_value(const Material& m, const ChannelBand& band,
                            double u, double v) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0))
    throw std::invalid_argument("texture_value: uv must lie in [0,1]^2");
  const bool nir = band.name == "NIR";
  const double rho = nir ? m.rho_nir : m.rho_vis;
  const double contrast = nir ? m.pattern_contrast_nir : m.pattern_contrast_vis;
  const double mod = pattern_modulation(m.pattern, u, v, m.pattern_scale);
  return std::clamp(rho + contrast * mod, 0.0, 1.0);
}

struct SceneIssue {
  std::string where;
  std::string message;
};

inline void check_material(const Material& m, const std::string& where,
                           std::vector<SceneIssue>& out) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(m.rho_vis) || !unit(m.rho_nir))
    out.push_back({where, "reflectance outside [0,1]"});
  if (!unit(m.pattern_contrast_vis) || !unit(m.pattern_contrast_nir))
    out.push_back({where, "pattern contrast outside [0,1]"});
  if (m.pattern == SurfacePattern::Uniform &&
      (m.pattern_contrast_vis != 0.0 || m.pattern_contrast_nir != 0.0))
    out.push_back({where, "uniform pattern with nonzero contrast"});
  if (m.pattern != SurfacePattern::Uniform && !(m.pattern_scale > 0))
    out.push_back({where, "nonpositive pattern scale"});
}

// Collects every violation instead of stopping at the first.
inline std::vector<SceneIssue> validate_scene(const SceneSpec& s) {
  std::vector<SceneIssue> out;
  if (s.width <= 0 || s.height <= 0)
    out.push_back({"scene", "nonpositive image dimensions"});
  if (s.objects.empty()) out.push_back({"scene", "no objects"});
  if (s.bands.empty()) out.push_back({"scene", "no bands declared"});

  std::set<int> zs;
  double max_distance = 0.0;
  for (const auto& o : s.objects) {
    const std::string where = "object " + o.name;
    check_material(o.material, where + " material", out);
    if (!(o.distance_m > 0)) out.push_back({where, "nonpositive distance"});
    max_distance = std::max(max_distance, o.distance_m);
    if (o.rect.w <= 0 || o.rect.h <= 0)
      out.push_back({where, "empty rect"});
    else if (!o.rect.inside(s.width, s.height))
      out.push_back({where, "rect outside image bounds"});
    if (!zs.insert(o.z_order).second)
      out.push_back({where, "duplicate z_order"});
  }

  check_material(s.background.material, "background material", out);
  if (!(s.background.distance_m > 0))
    out.push_back({"background", "nonpositive distance"});
  else if (s.background.distance_m < max_distance)
    out.push_back({"background", "background closer than farthest object"});

  for (const auto& b : s.bands) {
    if (!s.water.has_band(b.name))
      out.push_back({"water", "no coefficients for band " + b.name});
    if (!(s.light.power_for(b.name) > 0))
      out.push_back({"light", "nonpositive power for band " + b.name});
  }
  return out;
}

// Front-most object index per pixel (-1 where only background is visible).
inline std::vector<int> coverage_map(const SceneSpec& s) {
  std::vector<int> cover(static_cast<std::size_t>(s.width) * s.height, -1);
  std::vector<std::size_t> order(s.objects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.objects[a].z_order < s.objects[b].z_order;
  });
  for (std::size_t k : order) {
    const Rect& r = s.objects[k].rect;
    const int x1 = std::min(r.x + r.w, s.width);
    const int y1 = std::min(r.y + r.h, s.height);
    for (int y = std::max(r.y, 0); y < y1; ++y)
      for (int x = std::max(r.x, 0); x < x1; ++x)
        cover[static_cast<std::size_t>(y) * s.width + x] =
            static_cast<int>(k);
  }
  return cover;
}

}  // namespace uwimg
