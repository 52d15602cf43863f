#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwimg/geometry.hpp"
#include "uwimg/image.hpp"
#include "uwimg/image_ops.hpp"
#include "uwimg/linalg.hpp"

namespace uwimg {

struct RegistrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordered point pairs (src -> dst) used for homography estimation.
struct CorrespondenceSet {
  std::vector<Point> src;
  std::vector<Point> dst;
};

struct ChessboardDetection {
  bool ok = false;
  std::string message;
  std::vector<Point> corners;  // row-major from the top-left when ok
};

namespace detail {

// Saddle response Ixy^2 - Ixx*Iyy of the smoothed image; positive at
// checker X-crossings, nonpositive over domes and flats.
inline std::vector<double> saddle_response(const GrayImage& img,
                                           double sigma) {
  const int w = img.width, h = img.height;
  std::vector<double> v(img.pixels.begin(), img.pixels.end());
  v = gaussian_blur(v, w, h, sigma, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> s(v.size(), 0.0);
  auto at = [&](int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double ixx = at(x + 1, y) - 2.0 * at(x, y) + at(x - 1, y);
      const double iyy = at(x, y + 1) - 2.0 * at(x, y) + at(x, y - 1);
      const double ixy = (at(x + 1, y + 1) - at(x + 1, y - 1) -
                          at(x - 1, y + 1) + at(x - 1, y - 1)) / 4.0;
      s[static_cast<std::size_t>(y) * w + x] = ixy * ixy - ixx * iyy;
    }
  }
  return s;
}

// Quadratic-surface peak refinement on a 3x3 response patch; the offset is
// clamped to one pixel so a bad fit cannot fling the corner away.
inline Point refine_peak(const std::vector<double>& s, int w, int h, int x,
                         int y) {
  auto at = [&](int xx, int yy) {
    return s[static_cast<std::size_t>(yy) * w + xx];
  };
  if (x < 1 || y < 1 || x + 1 >= w || y + 1 >= h)
    return Point{double(x), double(y)};
  const double dx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
  const double dy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
  const double dxx = at(x + 1, y) - 2.0 * at(x, y) + at(x - 1, y);
  const double dyy = at(x, y + 1) - 2.0 * at(x, y) + at(x, y - 1);
  const double dxy = (at(x + 1, y + 1) - at(x + 1, y - 1) -
                      at(x - 1, y + 1) + at(x - 1, y - 1)) / 4.0;
  const double det = dxx * dyy - dxy * dxy;
  if (std::abs(det) < 1e-12) return Point{double(x), double(y)};
  double ox = -(dyy * dx - dxy * dy) / det;
  double oy = -(dxx * dy - dxy * dx) / det;
  ox = std::clamp(ox, -1.0, 1.0);
  oy = std::clamp(oy, -1.0, 1.0);
  return Point{x + ox, y + oy};
}

}  // namespace detail

// Locates the inner corners of a chessboard marker: saddle response, 5x5
// non-maximum candidates, top corner count by response, row partition by the
// largest y gaps, then subpixel refinement. An ROI restricts the search when
// the marker's whereabouts are known.
inline ChessboardDetection detect_chessboard(
    const GrayImage& img, int inner_cols, int inner_rows,
    std::optional<Rect> roi = std::nullopt) {
  ChessboardDetection det;
  if (inner_cols < 2 || inner_rows < 2) {
    det.message = "board must have at least 2x2 inner corners";
    return det;
  }
  Rect r = roi.value_or(Rect{0, 0, img.width, img.height});
  r.x = std::max(r.x, 0);
  r.y = std::max(r.y, 0);
  r.w = std::min(r.w, img.width - r.x);
  r.h = std::min(r.h, img.height - r.y);
  if (r.w <= 2 || r.h <= 2) {
    det.message = "search region degenerate";
    return det;
  }

  const std::vector<double> s = detail::saddle_response(img, 1.2);
  double smax = 0.0;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x)
      smax = std::max(smax, s[static_cast<std::size_t>(y) * img.width + x]);
  if (smax <= 0.0) {
    det.message = "no saddle response in search region";
    return det;
  }

  struct Cand {
    int x, y;
    double score;
  };
  std::vector<Cand> cands;
  const double thresh = 0.25 * smax;
  for (int y = r.y; y < r.y + r.h; ++y) {
    for (int x = r.x; x < r.x + r.w; ++x) {
      const double v = s[static_cast<std::size_t>(y) * img.width + x];
      if (v < thresh) continue;
      bool is_max = true;
      for (int dy = -2; dy <= 2 && is_max; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height)
            continue;
          const double nv = s[static_cast<std::size_t>(ny) * img.width + nx];
          if (nv > v || (nv == v && (ny < y || (ny == y && nx < x)))) {
            is_max = false;
            break;
          }
        }
      if (is_max) cands.push_back({x, y, v});
    }
  }

  const std::size_t want =
      static_cast<std::size_t>(inner_cols) * static_cast<std::size_t>(inner_rows);
  if (cands.size() < want) {
    det.message = "found " + std::to_string(cands.size()) + " of " +
                  std::to_string(want) + " corners";
    return det;
  }
  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return a.score > b.score; });
  cands.resize(want);

  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return a.y < b.y; });
  std::vector<std::size_t> breaks;  // index where a new row starts
  if (inner_rows > 1) {
    std::vector<std::pair<double, std::size_t>> gaps;
    for (std::size_t i = 1; i < cands.size(); ++i)
      gaps.emplace_back(double(cands[i].y) - cands[i - 1].y, i);
    std::sort(gaps.begin(), gaps.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; k < inner_rows - 1; ++k) breaks.push_back(gaps[k].second);
    std::sort(breaks.begin(), breaks.end());
  }
  std::vector<std::vector<Cand>> grid_rows;
  std::size_t start = 0;
  for (std::size_t b : breaks) {
    grid_rows.emplace_back(cands.begin() + static_cast<std::ptrdiff_t>(start),
                           cands.begin() + static_cast<std::ptrdiff_t>(b));
    start = b;
  }
  grid_rows.emplace_back(cands.begin() + static_cast<std::ptrdiff_t>(start),
                         cands.end());
  for (auto& row : grid_rows) {
    if (row.size() != static_cast<std::size_t>(inner_cols)) {
      det.message = "corner rows do not form a " + std::to_string(inner_cols) +
                    "x" + std::to_string(inner_rows) + " grid";
      return det;
    }
    std::sort(row.begin(), row.end(),
              [](const Cand& a, const Cand& b) { return a.x < b.x; });
  }

  for (const auto& row : grid_rows)
    for (const auto& c : row)
      det.corners.push_back(
          detail::refine_peak(s, img.width, img.height, c.x, c.y));
  det.ok = true;
  return det;
}

struct HomographyEstimate {
  Homography h;
  double rms = 0.0;
};

namespace detail {

struct NormTransform {
  double scale = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Point apply(const Point& p) const {
    return Point{scale * (p.x - cx), scale * (p.y - cy)};
  }
};

inline NormTransform normalizer(const std::vector<Point>& pts) {
  NormTransform t;
  for (const auto& p : pts) {
    t.cx += p.x;
    t.cy += p.y;
  }
  t.cx /= static_cast<double>(pts.size());
  t.cy /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts)
    mean_dist += std::hypot(p.x - t.cx, p.y - t.cy);
  mean_dist /= static_cast<double>(pts.size());
  t.scale = (mean_dist > 1e-12) ? std::sqrt(2.0) / mean_dist : 1.0;
  return t;
}

inline bool collinear(const Point& a, const Point& b, const Point& c) {
  const double area2 =
      (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return std::abs(area2) < 1e-9;
}

}  // namespace detail

// Direct linear transform with Hartley normalization; the singular vector
// comes from the smallest eigenpair of A^T A.
inline HomographyEstimate estimate_homography(const CorrespondenceSet& corr) {
  const std::size_t n = corr.src.size();
  if (n != corr.dst.size())
    throw RegistrationError("estimate_homography: src/dst size mismatch");
  if (n < 4)
    throw RegistrationError("estimate_homography: need at least 4 pairs");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (corr.src[i].x == corr.src[j].x && corr.src[i].y == corr.src[j].y)
        throw RegistrationError("estimate_homography: duplicated source point");
  if (n == 4) {
    const auto& p = corr.src;
    const auto& q = corr.dst;
    for (int skip = 0; skip < 4; ++skip) {
      Point a[3], b[3];
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (i != skip) {
          a[k] = p[static_cast<std::size_t>(i)];
          b[k] = q[static_cast<std::size_t>(i)];
          ++k;
        }
      if (detail::collinear(a[0], a[1], a[2]) ||
          detail::collinear(b[0], b[1], b[2]))
        throw RegistrationError(
            "estimate_homography: degenerate (collinear) configuration");
    }
  }

  const detail::NormTransform ts = detail::normalizer(corr.src);
  const detail::NormTransform td = detail::normalizer(corr.dst);

  std::vector<double> m(81, 0.0);
  auto accumulate = [&](const double row[9]) {
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) m[static_cast<std::size_t>(i) * 9 + j] += row[i] * row[j];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Point x = ts.apply(corr.src[i]);
    const Point u = td.apply(corr.dst[i]);
    const double r1[9] = {-x.x, -x.y, -1, 0, 0, 0, u.x * x.x, u.x * x.y, u.x};
    const double r2[9] = {0, 0, 0, -x.x, -x.y, -1, u.y * x.x, u.y * x.y, u.y};
    accumulate(r1);
    accumulate(r2);
  }

  const SymmetricEigen eig = eigen_symmetric(m, 9);
  Homography hn;
  for (int i = 0; i < 9; ++i) hn.m[static_cast<std::size_t>(i)] = eig.vectors[static_cast<std::size_t>(i)];

  // H = T_dst^-1 * Hn * T_src, then h33 = 1.
  Homography t_src = Homography::identity();
  t_src.m = {ts.scale, 0, -ts.scale * ts.cx, 0, ts.scale, -ts.scale * ts.cy,
             0, 0, 1};
  Homography t_dst_inv = Homography::identity();
  t_dst_inv.m = {1.0 / td.scale, 0, td.cx, 0, 1.0 / td.scale, td.cy, 0, 0, 1};

  Homography h = t_dst_inv * hn * t_src;
  if (std::abs(h.m[8]) < 1e-15)
    throw RegistrationError("estimate_homography: degenerate solution");
  h = h.normalized();
  if (!h.invertible())
    throw RegistrationError("estimate_homography: singular homography");

  HomographyEstimate out;
  out.h = h;
  double se = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point q = h.apply(corr.src[i]);
    const double dx = q.x - corr.dst[i].x;
    const double dy = q.y - corr.dst[i].y;
    se += dx * dx + dy * dy;
  }
  out.rms = std::sqrt(se / static_cast<double>(n));
  return out;
}

struct WarpResult {
  GrayImage image;
  std::vector<std::uint8_t> valid;  // 1 where the source was sampled
};

// Inverse-mapped bilinear warp onto the same grid: out(p) = img(H^-1 * p).
// Identity is returned bit-exact.
inline WarpResult warp(const GrayImage& img, const Homography& h) {
  if (!h.invertible())
    throw std::invalid_argument("warp: homography is not invertible");
  WarpResult out{GrayImage(img.width, img.height),
                 std::vector<std::uint8_t>(img.size(), 0)};
  if (h.is_identity()) {
    out.image = img;
    std::fill(out.valid.begin(), out.valid.end(), std::uint8_t{1});
    return out;
  }
  const Homography hinv = h.inverse();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Point q = hinv.apply(Point{double(x), double(y)});
      if (!(q.x >= 0.0 && q.x <= img.width - 1 && q.y >= 0.0 &&
            q.y <= img.height - 1))
        continue;
      const int x0 = static_cast<int>(std::floor(q.x));
      const int y0 = static_cast<int>(std::floor(q.y));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const double fx = q.x - x0;
      const double fy = q.y - y0;
      const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                       fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      out.image.pixels[i] = to_gray_level(v);
      out.valid[i] = 1;
    }
  }
  return out;
}

struct RegistrationResult {
  GrayImage nir_registered;
  Homography h_est;          // maps NIR pixel coords onto the VIS grid
  double corner_rms = 0.0;   // reprojection RMS over the marker corners
  std::vector<Point> corners_vis;
  std::vector<Point> corners_nir;
};

// Marker-based channel registration: find the board in both images, fit the
// NIR->VIS homography, resample NIR onto the VIS grid.
inline RegistrationResult register_pair(const GrayImage& vis,
                                        const GrayImage& nir, int board_cols,
                                        int board_rows,
                                        std::optional<Rect> roi = std::nullopt,
                                        int nir_roi_margin = 12) {
  if (!vis.same_size(nir))
    throw RegistrationError("register_pair: image dimensions differ");
  std::optional<Rect> nir_roi;
  if (roi) {
    Rect r = roi->inset(-nir_roi_margin);
    nir_roi = r;
  }
  const ChessboardDetection dv = detect_chessboard(vis, board_cols, board_rows, roi);
  if (!dv.ok)
    throw RegistrationError("register_pair: VIS detection failed: " + dv.message);
  const ChessboardDetection dn =
      detect_chessboard(nir, board_cols, board_rows, nir_roi);
  if (!dn.ok)
    throw RegistrationError("register_pair: NIR detection failed: " + dn.message);

  CorrespondenceSet corr{dn.corners, dv.corners};
  const HomographyEstimate est = estimate_homography(corr);

  RegistrationResult out;
  out.h_est = est.h;
  out.corner_rms = est.rms;
  out.corners_vis = dv.corners;
  out.corners_nir = dn.corners;
  out.nir_registered = warp(nir, est.h).image;
  return out;
}

// Per-pixel fusion weight in [-1, 1].
struct WeightMap {
  int width = 0;
  int height = 0;
  std::vector<double> weights;

  WeightMap() = default;
  WeightMap(int w, int h)
      : width(w), height(h), weights(static_cast<std::size_t>(w) * h, 0.0) {}
  double at(int x, int y) const {
    return weights[static_cast<std::size_t>(y) * width + x];
  }
  double& at(int x, int y) {
    return weights[static_cast<std::size_t>(y) * width + x];
  }
};

// F = clamp(round(V + w*N)); w = -1 subtracts the registered NIR, w = +1
// adds it.
inline GrayImage fuse_weighted(const GrayImage& vis, const GrayImage& nir_reg,
                               const WeightMap& w) {
  if (!vis.same_size(nir_reg) || vis.width != w.width ||
      vis.height != w.height)
    throw std::invalid_argument("fuse_weighted: dimension mismatch");
  for (double v : w.weights)
    if (!(v >= -1.0 && v <= 1.0))
      throw std::invalid_argument("fuse_weighted: weight outside [-1,1]");
  GrayImage out(vis.width, vis.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double f = vis.pixels[i] + w.weights[i] * nir_reg.pixels[i];
    out.pixels[i] = to_gray_level(f);
  }
  return out;
}

// Plant signature: NIR-bright while VIS-dark. Pixels where N - V exceeds
// delta get weight -alpha; a 3x3 strict-majority vote then despeckles the
// mask (borders use the in-bounds window).
inline WeightMap plant_mask(const GrayImage& nir_reg, const GrayImage& vis,
                            int delta, double alpha) {
  if (!nir_reg.same_size(vis))
    throw std::invalid_argument("plant_mask: dimension mismatch");
  if (delta <= 0) throw std::invalid_argument("plant_mask: delta must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("plant_mask: alpha must be in [0,1]");

  const int w = vis.width, h = vis.height;
  std::vector<std::uint8_t> raw(vis.size(), 0);
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = (static_cast<int>(nir_reg.pixels[i]) -
              static_cast<int>(vis.pixels[i])) > delta;

  WeightMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int cnt = 0, total = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          ++total;
          cnt += raw[static_cast<std::size_t>(ny) * w + nx];
        }
      if (2 * cnt > total) out.at(x, y) = -alpha;
    }
  }
  return out;
}

// Byte codec for weight maps stored as PGM: 128 is zero weight, 0 is -1,
// 255 is +1, linear in between (the two segments differ in slope by one
// count because 128 splits 256 levels unevenly).
inline std::uint8_t weight_to_byte(double w) {
  if (!(w >= -1.0 && w <= 1.0))
    throw std::invalid_argument("weight_to_byte: weight outside [-1,1]");
  const double v = (w < 0.0) ? 128.0 + w * 128.0 : 128.0 + w * 127.0;
  return static_cast<std::uint8_t>(std::clamp(round_half_up(v), 0, 255));
}

inline double byte_to_weight(std::uint8_t v) {
  return (v < 128) ? (static_cast<int>(v) - 128) / 128.0
                   : (static_cast<int>(v) - 128) / 127.0;
}

inline GrayImage weight_map_to_gray(const WeightMap& w) {
  GrayImage out(w.width, w.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = weight_to_byte(w.weights[i]);
  return out;
}

inline WeightMap gray_to_weight_map(const GrayImage& img) {
  WeightMap out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.weights[i] = byte_to_weight(img.pixels[i]);
  return out;
}

}  // namespace uwimg
