#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwimg/image.hpp"

namespace uwimg {

struct PgmFormatError : std::runtime_error {
  std::size_t byte_offset;
  std::string detail;  // message without the offset suffix

  PgmFormatError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " (byte " + std::to_string(offset) + ")"),
        byte_offset(offset),
        detail(message) {}
};

namespace detail {

inline bool pgm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// Whitespace and '#' comments between header tokens.
inline void pgm_skip(const std::vector<std::uint8_t>& d, std::size_t& pos) {
  while (pos < d.size()) {
    if (pgm_space(d[pos])) {
      ++pos;
    } else if (d[pos] == '#') {
      while (pos < d.size() && d[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

inline long pgm_uint(const std::vector<std::uint8_t>& d, std::size_t& pos,
                     const char* what) {
  pgm_skip(d, pos);
  if (pos >= d.size() || d[pos] < '0' || d[pos] > '9')
    throw PgmFormatError(std::string("expected ") + what, pos);
  long v = 0;
  while (pos < d.size() && d[pos] >= '0' && d[pos] <= '9') {
    v = v * 10 + (d[pos] - '0');
    if (v > 1000000000L) throw PgmFormatError("numeric field too large", pos);
    ++pos;
  }
  return v;
}

}  // namespace detail

// Binary (P5) grayscale decoder, maxval 255 only. Errors carry the offset
// of the offending byte.
inline GrayImage decode_pgm(const std::vector<std::uint8_t>& data) {
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
    throw PgmFormatError("not a P5 PGM (bad magic)", 0);
  std::size_t pos = 2;
  detail::pgm_skip(data, pos);
  const std::size_t dims_at = pos;
  const long w = detail::pgm_uint(data, pos, "width");
  const long h = detail::pgm_uint(data, pos, "height");
  detail::pgm_skip(data, pos);
  const std::size_t maxval_at = pos;
  const long maxval = detail::pgm_uint(data, pos, "maxval");
  if (w <= 0 || h <= 0)
    throw PgmFormatError("dimensions must be positive", dims_at);
  if (w * h > 100000000L)
    throw PgmFormatError("image too large", dims_at);
  if (maxval != 255)
    throw PgmFormatError("unsupported maxval " + std::to_string(maxval) +
                             " (only 255)",
                         maxval_at);
  if (pos >= data.size() || !detail::pgm_space(data[pos]))
    throw PgmFormatError("expected single whitespace after maxval", pos);
  ++pos;

  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (data.size() - pos < need)
    throw PgmFormatError("truncated payload: need " + std::to_string(need) +
                             " bytes, have " + std::to_string(data.size() - pos),
                         data.size());
  if (data.size() - pos > need)
    throw PgmFormatError("trailing bytes after payload", pos + need);

  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  std::copy(data.begin() + static_cast<std::ptrdiff_t>(pos), data.end(),
            img.pixels.begin());
  return img;
}

// Writer contract: exactly "P5\n<w> <h>\n255\n" then row-major payload.
inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n",
                              img.width, img.height);
  std::vector<std::uint8_t> out(header, header + n);
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  try {
    return decode_pgm(data);
  } catch (const PgmFormatError& e) {
    throw PgmFormatError(path + ": " + e.detail, e.byte_offset);
  }
}

inline void write_pgm(const GrayImage& img, const std::string& path) {
  const std::vector<std::uint8_t> data = encode_pgm(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace uwimg
