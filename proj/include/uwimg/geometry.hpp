#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "uwimg/image.hpp"

namespace uwimg {

// 3x3 projective map acting on pixel coordinates, row-major storage.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return Homography{}; }

  static Homography translation(double dx, double dy) {
    return Homography{{1, 0, dx, 0, 1, dy, 0, 0, 1}};
  }

  static Homography rotation_about(double cx, double cy, double angle_rad) {
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    // T(cx,cy) * R * T(-cx,-cy)
    return Homography{{c, -s, cx - c * cx + s * cy,
                       s, c, cy - s * cx - c * cy,
                       0, 0, 1}};
  }

  Point apply(const Point& p) const {
    const double w = m[6] * p.x + m[7] * p.y + m[8];
    if (std::abs(w) < 1e-15)
      throw std::domain_error("Homography::apply: point maps to infinity");
    return Point{(m[0] * p.x + m[1] * p.y + m[2]) / w,
                 (m[3] * p.x + m[4] * p.y + m[5]) / w};
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  // Scaled so the bottom-right entry is exactly 1.
  Homography normalized() const {
    if (std::abs(m[8]) < 1e-15)
      throw std::domain_error("Homography::normalized: h33 is ~0");
    Homography out;
    for (int i = 0; i < 9; ++i) out.m[i] = m[i] / m[8];
    out.m[8] = 1.0;
    return out;
  }

  bool invertible() const { return std::abs(normalized().det()) > 1e-12; }

  Homography inverse() const {
    const double d = det();
    if (std::abs(d) < 1e-300)
      throw std::domain_error("Homography::inverse: singular matrix");
    const auto& a = m;
    Homography out{{(a[4] * a[8] - a[5] * a[7]) / d,
                    (a[2] * a[7] - a[1] * a[8]) / d,
                    (a[1] * a[5] - a[2] * a[4]) / d,
                    (a[5] * a[6] - a[3] * a[8]) / d,
                    (a[0] * a[8] - a[2] * a[6]) / d,
                    (a[2] * a[3] - a[0] * a[5]) / d,
                    (a[3] * a[7] - a[4] * a[6]) / d,
                    (a[1] * a[6] - a[0] * a[7]) / d,
                    (a[0] * a[4] - a[1] * a[3]) / d}};
    return out;
  }

  bool is_identity() const {
    static constexpr std::array<double, 9> id{1, 0, 0, 0, 1, 0, 0, 0, 1};
    return m == id;
  }
};

inline Homography operator*(const Homography& a, const Homography& b) {
  Homography out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a.m[r * 3 + k] * b.m[k * 3 + c];
      out.m[r * 3 + c] = s;
    }
  return out;
}

// out(p) = src(pixel_map(p)), bilinear, out-of-source samples become 0.
// Pixel centers sit at integer coordinates.
inline RadianceImage resample_bilinear(const RadianceImage& src,
                                       const Homography& pixel_map) {
  RadianceImage out(src.width, src.height, 0.0);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const Point q = pixel_map.apply(Point{double(x), double(y)});
      if (!(q.x >= 0.0 && q.x <= src.width - 1 && q.y >= 0.0 &&
            q.y <= src.height - 1))
        continue;
      const int x0 = static_cast<int>(std::floor(q.x));
      const int y0 = static_cast<int>(std::floor(q.y));
      const double fx = q.x - x0;
      const double fy = q.y - y0;
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double v00 = src.at(x0, y0);
      const double v10 = src.at(x1, y0);
      const double v01 = src.at(x0, y1);
      const double v11 = src.at(x1, y1);
      out.at(x, y) = (1 - fy) * ((1 - fx) * v00 + fx * v10) +
                     fy * ((1 - fx) * v01 + fx * v11);
    }
  }
  return out;
}

}  // namespace uwimg
