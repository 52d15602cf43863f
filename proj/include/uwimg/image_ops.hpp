#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "uwimg/image.hpp"

namespace uwimg {

struct Histogram {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;
};

inline Histogram histogram(const GrayImage& img) {
  Histogram h;
  for (std::uint8_t v : img.pixels) ++h.bins[v];
  h.total = img.pixels.size();
  return h;
}

struct RegionStats {
  double mean = 0.0;
  double stddev = 0.0;
  int min = 0;
  int max = 0;
};

// Population statistics over a rectangular region.
inline RegionStats region_stats(const GrayImage& img, const Rect& r) {
  if (!r.inside(img.width, img.height))
    throw std::invalid_argument("region_stats: rect empty or out of bounds");
  double sum = 0.0, sum2 = 0.0;
  int lo = 255, hi = 0;
  for (int y = r.y; y < r.y + r.h; ++y) {
    for (int x = r.x; x < r.x + r.w; ++x) {
      const int v = img.at(x, y);
      sum += v;
      sum2 += static_cast<double>(v) * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double n = static_cast<double>(r.area());
  RegionStats s;
  s.mean = sum / n;
  s.stddev = std::sqrt(std::max(0.0, sum2 / n - s.mean * s.mean));
  s.min = lo;
  s.max = hi;
  return s;
}

namespace detail {

// LUT from a (possibly clipped) histogram: map the cdf onto [0,255] anchored
// at the lowest occupied bin. A single occupied bin maps to itself.
inline std::array<std::uint8_t, 256> equalize_lut(
    const std::array<std::uint64_t, 256>& bins, std::uint64_t total) {
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) lut[v] = static_cast<std::uint8_t>(v);
  if (total == 0) return lut;
  std::uint64_t cdf_min = 0;
  for (int v = 0; v < 256; ++v)
    if (bins[v] > 0) {
      cdf_min = bins[v];
      break;
    }
  if (cdf_min == total) return lut;
  std::uint64_t cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += bins[v];
    const double scaled =
        255.0 * static_cast<double>(cdf - std::min(cdf, cdf_min)) /
        static_cast<double>(total - cdf_min);
    lut[v] = static_cast<std::uint8_t>(
        std::clamp(round_half_up(scaled), 0, 255));
  }
  return lut;
}

inline int reflect101(int i, int n) {
  if (i < 0) i = -i;
  if (i >= n) i = 2 * n - 2 - i;
  return i;
}

inline std::vector<double> gaussian_kernel_half(double sigma, int radius) {
  std::vector<double> k(static_cast<std::size_t>(radius) + 1);
  double sum = 0.0;
  for (int i = 0; i <= radius; ++i) {
    k[static_cast<std::size_t>(i)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += (i == 0 ? 1.0 : 2.0) * k[static_cast<std::size_t>(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian on a double raster, reflect-101 borders. Radii are
// capped at n-1 per axis so one reflection always suffices.
inline std::vector<double> gaussian_blur(const std::vector<double>& in, int w,
                                         int h, double sigma_x, double sigma_y,
                                         int radius_x, int radius_y) {
  const int rx = (sigma_x > 0) ? std::min(radius_x, w - 1) : 0;
  const int ry = (sigma_y > 0) ? std::min(radius_y, h - 1) : 0;
  if (rx <= 0 && ry <= 0) return in;

  std::vector<double> tmp = in;
  if (rx > 0) {
    const std::vector<double> kx = gaussian_kernel_half(sigma_x, rx);
    for (int y = 0; y < h; ++y) {
      const double* row = in.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        double s = kx[0] * row[x];
        for (int i = 1; i <= rx; ++i)
          s += kx[static_cast<std::size_t>(i)] *
               (row[reflect101(x - i, w)] + row[reflect101(x + i, w)]);
        tmp[static_cast<std::size_t>(y) * w + x] = s;
      }
    }
  }
  if (ry <= 0) return tmp;
  std::vector<double> out(in.size());
  const std::vector<double> ky = gaussian_kernel_half(sigma_y, ry);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = ky[0] * tmp[static_cast<std::size_t>(y) * w + x];
      for (int i = 1; i <= ry; ++i)
        s += ky[static_cast<std::size_t>(i)] *
             (tmp[static_cast<std::size_t>(reflect101(y - i, h)) * w + x] +
              tmp[static_cast<std::size_t>(reflect101(y + i, h)) * w + x]);
      out[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  return out;
}

inline std::vector<double> gaussian_blur(const std::vector<double>& in, int w,
                                         int h, double sigma, int radius) {
  return gaussian_blur(in, w, h, sigma, sigma, radius, radius);
}

}  // namespace detail

// Global histogram equalization; constant images pass through unchanged.
inline GrayImage equalize_global(const GrayImage& img) {
  const Histogram h = histogram(img);
  const auto lut = detail::equalize_lut(h.bins, h.total);
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = lut[img.pixels[i]];
  return out;
}

// Contrast-limited local equalization: per-tile clipped histograms with
// bilinear LUT blending between tile centers. Tiles that cannot subdivide
// the image degrade to the global variant.
inline GrayImage equalize_local(const GrayImage& img, int tile,
                                double clip_limit) {
  if (tile < 8) throw std::invalid_argument("equalize_local: tile must be >= 8");
  if (!(clip_limit > 0.0 && clip_limit <= 1.0))
    throw std::invalid_argument("equalize_local: clip_limit must be in (0,1]");
  if (tile >= img.width && tile >= img.height) return equalize_global(img);

  const int ntx = (img.width + tile - 1) / tile;
  const int nty = (img.height + tile - 1) / tile;
  std::vector<int> bx(ntx + 1), by(nty + 1);
  for (int i = 0; i <= ntx; ++i)
    bx[i] = static_cast<int>(static_cast<long long>(i) * img.width / ntx);
  for (int j = 0; j <= nty; ++j)
    by[j] = static_cast<int>(static_cast<long long>(j) * img.height / nty);

  std::vector<std::array<std::uint8_t, 256>> luts(
      static_cast<std::size_t>(ntx) * nty);
  for (int tj = 0; tj < nty; ++tj) {
    for (int ti = 0; ti < ntx; ++ti) {
      std::array<std::uint64_t, 256> bins{};
      for (int y = by[tj]; y < by[tj + 1]; ++y)
        for (int x = bx[ti]; x < bx[ti + 1]; ++x) ++bins[img.at(x, y)];
      const std::uint64_t area =
          static_cast<std::uint64_t>(bx[ti + 1] - bx[ti]) *
          (by[tj + 1] - by[tj]);

      int occupied = 0;
      for (int v = 0; v < 256; ++v)
        if (bins[v] > 0) ++occupied;
      auto& lut = luts[static_cast<std::size_t>(tj) * ntx + ti];
      if (occupied <= 1) {
        for (int v = 0; v < 256; ++v) lut[v] = static_cast<std::uint8_t>(v);
        continue;
      }

      const std::uint64_t limit = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::floor(clip_limit * area)));
      std::uint64_t excess = 0;
      for (int v = 0; v < 256; ++v)
        if (bins[v] > limit) {
          excess += bins[v] - limit;
          bins[v] = limit;
        }
      const std::uint64_t base = excess / 256;
      const std::uint64_t rem = excess % 256;
      for (int v = 0; v < 256; ++v)
        bins[v] += base + (static_cast<std::uint64_t>(v) < rem ? 1 : 0);

      lut = detail::equalize_lut(bins, area);
    }
  }

  std::vector<double> cx(ntx), cy(nty);
  for (int i = 0; i < ntx; ++i) cx[i] = (bx[i] + bx[i + 1] - 1) / 2.0;
  for (int j = 0; j < nty; ++j) cy[j] = (by[j] + by[j + 1] - 1) / 2.0;

  auto axis_blend = [](const std::vector<double>& c, int n, int p, int& i0,
                       int& i1, double& f) {
    if (p <= c[0]) {
      i0 = i1 = 0;
      f = 0.0;
    } else if (p >= c[static_cast<std::size_t>(n) - 1]) {
      i0 = i1 = n - 1;
      f = 0.0;
    } else {
      i0 = 0;
      while (i0 + 1 < n && c[static_cast<std::size_t>(i0) + 1] < p) ++i0;
      i1 = i0 + 1;
      f = (p - c[i0]) / (c[i1] - c[i0]);
    }
  };

  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    int j0, j1;
    double fy;
    axis_blend(cy, nty, y, j0, j1, fy);
    for (int x = 0; x < img.width; ++x) {
      int i0, i1;
      double fx;
      axis_blend(cx, ntx, x, i0, i1, fx);
      const std::uint8_t v = img.at(x, y);
      const double t00 = luts[static_cast<std::size_t>(j0) * ntx + i0][v];
      const double t10 = luts[static_cast<std::size_t>(j0) * ntx + i1][v];
      const double t01 = luts[static_cast<std::size_t>(j1) * ntx + i0][v];
      const double t11 = luts[static_cast<std::size_t>(j1) * ntx + i1][v];
      const double b = (1 - fy) * ((1 - fx) * t00 + fx * t10) +
                       fy * ((1 - fx) * t01 + fx * t11);
      out.at(x, y) = static_cast<std::uint8_t>(
          std::clamp(round_half_up(b), 0, 255));
    }
  }
  return out;
}

// Nearest-rank percentile over the whole image.
inline int percentile_value(const GrayImage& img, double p) {
  if (p < 0.0 || p > 100.0)
    throw std::invalid_argument("percentile_value: p must be in [0,100]");
  const Histogram h = histogram(img);
  const std::uint64_t n = h.total;
  std::uint64_t rank = static_cast<std::uint64_t>(
      std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::uint64_t>(rank, 1, n);
  std::uint64_t cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += h.bins[v];
    if (cdf >= rank) return v;
  }
  return 255;
}

// Linear stretch sending the p_low percentile to 0 and p_high to 255.
inline GrayImage contrast_stretch(const GrayImage& img, double p_low,
                                  double p_high) {
  if (!(p_low >= 0.0 && p_low < p_high && p_high <= 100.0))
    throw std::invalid_argument(
        "contrast_stretch: requires 0 <= p_low < p_high <= 100");
  const int lo = percentile_value(img, p_low);
  const int hi = percentile_value(img, p_high);
  if (hi == lo) return img;
  GrayImage out(img.width, img.height);
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v)
    lut[v] = static_cast<std::uint8_t>(std::clamp(
        round_half_up(255.0 * (v - lo) / (hi - lo)), 0, 255));
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = lut[img.pixels[i]];
  return out;
}

// Core of the homomorphic filter: log-transform, then apply the
// high-emphasis transfer H(f) = gl + (gh-gl)*(1 - exp(-f^2/(2 f0^2))) with f
// in cycles per image. Realized as gh*L - (gh-gl)*G(L) where G is a Gaussian
// blur whose frequency response equals exp(-f^2/(2 f0^2)).
inline std::vector<double> homomorphic_log_response(const GrayImage& img,
                                                    double cutoff,
                                                    double gamma_low,
                                                    double gamma_high) {
  if (!(cutoff > 0.0))
    throw std::invalid_argument("homomorphic_filter: cutoff must be positive");
  if (!(gamma_low > 0.0 && gamma_low <= gamma_high))
    throw std::invalid_argument(
        "homomorphic_filter: requires 0 < gamma_low <= gamma_high");

  std::vector<double> logv(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    logv[i] = std::log1p(static_cast<double>(img.pixels[i]));

  // Gaussian blur whose frequency response is exp(-f^2/(2 cutoff^2)) with f
  // in cycles/image per axis; the wide truncation keeps the truncated kernel
  // within ~1e-7 of that ideal response.
  const double sigma_x = img.width / (2.0 * std::numbers::pi * cutoff);
  const double sigma_y = img.height / (2.0 * std::numbers::pi * cutoff);
  const std::vector<double> low = detail::gaussian_blur(
      logv, img.width, img.height, sigma_x, sigma_y,
      static_cast<int>(std::ceil(6.0 * sigma_x)),
      static_cast<int>(std::ceil(6.0 * sigma_y)));

  std::vector<double> out(logv.size());
  for (std::size_t i = 0; i < logv.size(); ++i)
    out[i] = gamma_high * logv[i] - (gamma_high - gamma_low) * low[i];
  return out;
}

// Exponentiate the filtered log image and stretch min..max onto [0,255];
// a flat response therefore reproduces the input exactly when the input
// already spans the full range.
inline GrayImage homomorphic_filter(const GrayImage& img, double cutoff,
                                    double gamma_low, double gamma_high) {
  const std::vector<double> f =
      homomorphic_log_response(img, cutoff, gamma_low, gamma_high);
  std::vector<double> lin(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) lin[i] = std::expm1(f[i]);
  const auto [mn, mx] = std::minmax_element(lin.begin(), lin.end());
  GrayImage out(img.width, img.height);
  if (!(*mx > *mn)) {
    out.pixels = img.pixels;
    return out;
  }
  for (std::size_t i = 0; i < lin.size(); ++i)
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(
        round_half_up(255.0 * (lin[i] - *mn) / (*mx - *mn)), 0, 255));
  return out;
}

struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;  // 1 = edge

  EdgeMap() = default;
  EdgeMap(int w, int h) : width(w), height(h),
                          mask(static_cast<std::size_t>(w) * h, 0) {}
  std::uint8_t at(int x, int y) const {
    return mask[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return mask[static_cast<std::size_t>(y) * width + x];
  }
  long long count() const {
    long long n = 0;
    for (auto v : mask) n += v;
    return n;
  }
};

namespace detail {

// 3x3 Sobel on the (optionally smoothed) image; border pixels keep zero
// gradient. gx grows to the right, gy grows downward.
inline void sobel_gradients(const std::vector<double>& v, int w, int h,
                            std::vector<double>& gx, std::vector<double>& gy) {
  gx.assign(v.size(), 0.0);
  gy.assign(v.size(), 0.0);
  auto at = [&](int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)) -
              (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
      gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)) -
              (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
    }
  }
}

}  // namespace detail

// Canny contract, frozen for reproducibility: Gaussian smooth (none when
// sigma = 0, radius ceil(3*sigma) otherwise), 3x3 Sobel with zero-gradient
// border, non-maximum suppression over 4 quantized directions (strictly
// greater than the first neighbor, at least equal to the second), then
// 8-connected hysteresis from strong seeds.
inline EdgeMap canny(const GrayImage& img, double sigma, double t_low,
                     double t_high) {
  if (sigma < 0) throw std::invalid_argument("canny: sigma must be >= 0");
  if (!(t_low > 0 && t_low < t_high))
    throw std::invalid_argument("canny: requires 0 < t_low < t_high");

  const int w = img.width, h = img.height;
  std::vector<double> v(img.pixels.begin(), img.pixels.end());
  if (sigma > 0)
    v = detail::gaussian_blur(v, w, h, sigma,
                              static_cast<int>(std::ceil(3.0 * sigma)));

  std::vector<double> gx, gy;
  detail::sobel_gradients(v, w, h, gx, gy);
  std::vector<double> mag(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    mag[i] = std::hypot(gx[i], gy[i]);

  // tan(22.5 deg) and tan(67.5 deg) split the four direction sectors.
  constexpr double kTanLo = 0.4142135623730951;
  constexpr double kTanHi = 2.414213562373095;

  std::vector<std::uint8_t> nms(v.size(), 0);
  auto m = [&](int x, int y) { return mag[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (mag[i] <= 0.0) continue;
      const double ax = std::abs(gx[i]);
      const double ay = std::abs(gy[i]);
      double n0, n1;
      if (ay <= kTanLo * ax) {
        n0 = m(x - 1, y);
        n1 = m(x + 1, y);
      } else if (ay >= kTanHi * ax) {
        n0 = m(x, y - 1);
        n1 = m(x, y + 1);
      } else if (gx[i] * gy[i] > 0) {
        n0 = m(x - 1, y - 1);
        n1 = m(x + 1, y + 1);
      } else {
        n0 = m(x + 1, y - 1);
        n1 = m(x - 1, y + 1);
      }
      if (mag[i] > n0 && mag[i] >= n1) nms[i] = 1;
    }
  }

  EdgeMap out(w, h);
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (nms[i] && mag[i] >= t_high) {
        out.mask[i] = 1;
        queue.emplace_back(x, y);
      }
    }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t i = static_cast<std::size_t>(ny) * w + nx;
        if (!out.mask[i] && nms[i] && mag[i] >= t_low) {
          out.mask[i] = 1;
          queue.emplace_back(nx, ny);
        }
      }
  }
  return out;
}

enum class OverlayState : std::uint8_t { None = 0, NirOnly = 1, VisOnly = 2, Both = 3 };

struct OverlayMap {
  int width = 0;
  int height = 0;
  std::vector<OverlayState> states;

  OverlayMap() = default;
  OverlayMap(int w, int h)
      : width(w), height(h),
        states(static_cast<std::size_t>(w) * h, OverlayState::None) {}
  OverlayState at(int x, int y) const {
    return states[static_cast<std::size_t>(y) * width + x];
  }
};

inline OverlayMap edge_overlay(const EdgeMap& nir, const EdgeMap& vis) {
  if (nir.width != vis.width || nir.height != vis.height)
    throw std::invalid_argument("edge_overlay: dimension mismatch");
  OverlayMap out(nir.width, nir.height);
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    const bool n = nir.mask[i] != 0;
    const bool v = vis.mask[i] != 0;
    out.states[i] = n && v   ? OverlayState::Both
                    : n      ? OverlayState::NirOnly
                    : v      ? OverlayState::VisOnly
                             : OverlayState::None;
  }
  return out;
}

struct OverlayCounts {
  long long none = 0;
  long long nir_only = 0;
  long long vis_only = 0;
  long long both = 0;
};

inline OverlayCounts edge_counts(const OverlayMap& overlay, const Rect& r) {
  if (!r.inside(overlay.width, overlay.height))
    throw std::invalid_argument("edge_counts: region empty or out of bounds");
  OverlayCounts c;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) {
      switch (overlay.at(x, y)) {
        case OverlayState::None: ++c.none; break;
        case OverlayState::NirOnly: ++c.nir_only; break;
        case OverlayState::VisOnly: ++c.vis_only; break;
        case OverlayState::Both: ++c.both; break;
      }
    }
  return c;
}

// Display rendering used by the overlay artifact: NIR edges draw black over
// gray VIS edges on a white page; overlapping edges stay black.
inline GrayImage overlay_to_gray(const OverlayMap& overlay) {
  GrayImage out(overlay.width, overlay.height);
  for (std::size_t i = 0; i < overlay.states.size(); ++i) {
    switch (overlay.states[i]) {
      case OverlayState::None: out.pixels[i] = 255; break;
      case OverlayState::VisOnly: out.pixels[i] = 128; break;
      case OverlayState::NirOnly: out.pixels[i] = 0; break;
      case OverlayState::Both: out.pixels[i] = 0; break;
    }
  }
  return out;
}

}  // namespace uwimg
