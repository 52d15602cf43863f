#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace uwimg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned pixel rectangle, origin at the top-left corner.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  long long area() const { return static_cast<long long>(w) * h; }
  bool inside(int image_w, int image_h) const {
    return w > 0 && h > 0 && x >= 0 && y >= 0 && x + w <= image_w &&
           y + h <= image_h;
  }
  Rect inset(int margin) const {
    return Rect{x + margin, y + margin, w - 2 * margin, h - 2 * margin};
  }
};

// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        pixels(check_dims(w, h), fill) {}

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return pixels.size(); }
  bool same_size(const GrayImage& o) const {
    return width == o.width && height == o.height;
  }

 private:
  static std::size_t check_dims(int w, int h) {
    if (w <= 0 || h <= 0)
      throw std::invalid_argument("GrayImage: dimensions must be positive");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
};

// Nonnegative relative-radiance raster, the pre-quantization product.
struct RadianceImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  RadianceImage() = default;
  RadianceImage(int w, int h, double fill = 0.0)
      : width(w), height(h), values(check_dims(w, h), fill) {}

  double at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  double& at(int x, int y) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return values.size(); }

 private:
  static std::size_t check_dims(int w, int h) {
    if (w <= 0 || h <= 0)
      throw std::invalid_argument("RadianceImage: dimensions must be positive");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
};

// Half-up rounding, frozen for cross-platform reproducibility.
inline int round_half_up(double v) {
  return static_cast<int>(std::floor(v + 0.5));
}

inline std::uint8_t to_gray_level(double v) {
  int q = round_half_up(v);
  if (q < 0) q = 0;
  if (q > 255) q = 255;
  return static_cast<std::uint8_t>(q);
}

}  // namespace uwimg
