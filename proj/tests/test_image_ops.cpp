#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "uwimg/image_ops.hpp"

using namespace uwimg;

namespace {

GrayImage random_image(std::mt19937_64& rng, int w, int h, int lo = 0,
                       int hi = 255) {
  GrayImage img(w, h);
  std::uniform_int_distribution<int> d(lo, hi);
  for (auto& p : img.pixels) p = std::uint8_t(d(rng));
  return img;
}

GrayImage from_values(int w, int h, std::initializer_list<int> vals) {
  GrayImage img(w, h);
  std::size_t i = 0;
  for (int v : vals) img.pixels[i++] = std::uint8_t(v);
  return img;
}

}  // namespace

TEST_CASE("histogram counts every pixel exactly once") {
  const GrayImage img = from_values(2, 2, {0, 0, 255, 128});
  const Histogram h = histogram(img);
  CHECK(h.total == 4);
  CHECK(h.bins[0] == 2);
  CHECK(h.bins[128] == 1);
  CHECK(h.bins[255] == 1);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const GrayImage r = random_image(rng, 17, 13);
    const Histogram hr = histogram(r);
    std::uint64_t sum = 0;
    for (auto b : hr.bins) sum += b;
    CHECK(sum == hr.total);
    CHECK(hr.total == 17u * 13u);
  }
}

TEST_CASE("region statistics match direct formulas") {
  const GrayImage pair = from_values(2, 1, {0, 255});
  const RegionStats s = region_stats(pair, Rect{0, 0, 2, 1});
  CHECK(s.mean == 127.5);
  CHECK(s.stddev == 127.5);
  CHECK(s.min == 0);
  CHECK(s.max == 255);

  const GrayImage flat = from_values(3, 1, {10, 10, 10});
  const RegionStats f = region_stats(flat, Rect{0, 0, 3, 1});
  CHECK(f.mean == 10.0);
  CHECK(f.stddev == 0.0);

  CHECK_THROWS_AS(region_stats(pair, Rect{0, 0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(region_stats(pair, Rect{1, 0, 2, 1}), std::invalid_argument);
}

TEST_CASE("full-frame statistics agree with histogram moments") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    const GrayImage img = random_image(rng, 23, 9);
    const RegionStats s = region_stats(img, Rect{0, 0, 23, 9});
    const Histogram h = histogram(img);
    double mean = 0.0, sq = 0.0;
    int lo = 255, hi = 0;
    for (int v = 0; v < 256; ++v) {
      if (!h.bins[std::size_t(v)]) continue;
      mean += double(v) * double(h.bins[std::size_t(v)]);
      sq += double(v) * v * double(h.bins[std::size_t(v)]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    mean /= double(h.total);
    const double stddev = std::sqrt(sq / double(h.total) - mean * mean);
    CHECK(s.mean == Catch::Approx(mean).margin(1e-12));
    CHECK(s.stddev == Catch::Approx(stddev).margin(1e-9));
    CHECK(s.min == lo);
    CHECK(s.max == hi);
  }
}

TEST_CASE("global equalization maps the documented examples") {
  const GrayImage two = from_values(2, 2, {10, 10, 200, 200});
  const GrayImage eq = equalize_global(two);
  CHECK(int(eq.pixels[0]) == 0);
  CHECK(int(eq.pixels[1]) == 0);
  CHECK(int(eq.pixels[2]) == 255);
  CHECK(int(eq.pixels[3]) == 255);

  const GrayImage ends = from_values(2, 1, {0, 255});
  const GrayImage eq2 = equalize_global(ends);
  CHECK(int(eq2.pixels[0]) == 0);
  CHECK(int(eq2.pixels[1]) == 255);

  const GrayImage flat = from_values(3, 2, {77, 77, 77, 77, 77, 77});
  CHECK(equalize_global(flat).pixels == flat.pixels);
}

TEST_CASE("global equalization matches the cdf formula on random images") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(4, 32);
  for (int i = 0; i < 20; ++i) {
    const GrayImage img = random_image(rng, size(rng), size(rng));
    const GrayImage got = equalize_global(img);
    const GrayImage want = oracles::cdf_equalize(img);
    CHECK(got.pixels == want.pixels);
  }
}

TEST_CASE("global equalization preserves intensity ordering") {
  std::mt19937_64 rng(4);
  const GrayImage img = random_image(rng, 32, 32, 40, 200);
  const GrayImage eq = equalize_global(img);
  std::array<int, 256> mapped;
  mapped.fill(-1);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    mapped[img.pixels[i]] = eq.pixels[i];
  int prev = -1;
  for (int v = 0; v < 256; ++v) {
    if (mapped[std::size_t(v)] < 0) continue;
    CHECK(mapped[std::size_t(v)] >= prev);
    prev = mapped[std::size_t(v)];
  }
}

TEST_CASE("repeated global equalization is nearly a fixed point") {
  std::mt19937_64 rng(5);
  const GrayImage img = random_image(rng, 24, 24);
  const GrayImage once = equalize_global(img);
  const GrayImage twice = equalize_global(once);
  for (std::size_t i = 0; i < once.pixels.size(); ++i)
    CHECK(std::abs(int(once.pixels[i]) - int(twice.pixels[i])) <= 1);
}

TEST_CASE("local equalization validates its parameters") {
  const GrayImage img(32, 32);
  CHECK_THROWS_AS(equalize_local(img, 7, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(equalize_local(img, 16, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(equalize_local(img, 16, 1.5), std::invalid_argument);
}

TEST_CASE("local equalization leaves constants alone and degrades to global") {
  GrayImage flat(48, 40);
  std::fill(flat.pixels.begin(), flat.pixels.end(), std::uint8_t(90));
  CHECK(equalize_local(flat, 16, 0.9).pixels == flat.pixels);

  std::mt19937_64 rng(6);
  const GrayImage img = random_image(rng, 24, 20);
  CHECK(equalize_local(img, 64, 1.0).pixels == equalize_global(img).pixels);
}

TEST_CASE("local equalization widens a low-contrast ramp") {
  GrayImage ramp(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      ramp.at(x, y) = std::uint8_t(100 + (x * 40) / 64);
  const GrayImage out = equalize_local(ramp, 16, 1.0);
  const RegionStats before = region_stats(ramp, Rect{0, 0, 64, 64});
  const RegionStats after = region_stats(out, Rect{0, 0, 64, 64});
  CHECK(after.max - after.min > (before.max - before.min) + 60);
  CHECK(after.min < 40);
  CHECK(after.max > 215);
}

TEST_CASE("clipping caps the slope of local equalization") {
  std::mt19937_64 rng(7);
  GrayImage img(64, 64);
  // narrow value spread so unclipped equalization would stretch hard
  std::uniform_int_distribution<int> d(118, 138);
  for (auto& p : img.pixels) p = std::uint8_t(d(rng));
  const GrayImage strong = equalize_local(img, 16, 1.0);
  const GrayImage gentle = equalize_local(img, 16, 0.01);
  const RegionStats rs = region_stats(strong, Rect{2, 2, 60, 60});
  const RegionStats rg = region_stats(gentle, Rect{2, 2, 60, 60});
  CHECK(rg.max - rg.min < rs.max - rs.min);
}

TEST_CASE("percentile lookup uses nearest rank") {
  const GrayImage img = from_values(4, 1, {1, 2, 3, 4});
  CHECK(percentile_value(img, 0.0) == 1);
  CHECK(percentile_value(img, 25.0) == 1);
  CHECK(percentile_value(img, 50.0) == 2);
  CHECK(percentile_value(img, 75.0) == 3);
  CHECK(percentile_value(img, 100.0) == 4);
  CHECK_THROWS_AS(percentile_value(img, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(percentile_value(img, 101.0), std::invalid_argument);
}

TEST_CASE("contrast stretch maps the percentile window onto the full range") {
  GrayImage ramp(51, 1);
  for (int x = 0; x <= 50; ++x) ramp.at(x, 0) = std::uint8_t(50 + x);
  const GrayImage out = contrast_stretch(ramp, 0.0, 100.0);
  for (int x = 0; x <= 50; ++x) {
    const int expected =
        std::clamp(int(std::floor(255.0 * x / 50.0 + 0.5)), 0, 255);
    CHECK(int(out.at(x, 0)) == expected);
  }

  GrayImage flat(4, 4);
  std::fill(flat.pixels.begin(), flat.pixels.end(), std::uint8_t(99));
  CHECK(contrast_stretch(flat, 1.0, 99.0).pixels == flat.pixels);

  CHECK_THROWS_AS(contrast_stretch(ramp, 50.0, 50.0), std::invalid_argument);
  CHECK_THROWS_AS(contrast_stretch(ramp, -1.0, 99.0), std::invalid_argument);
  CHECK_THROWS_AS(contrast_stretch(ramp, 1.0, 101.0), std::invalid_argument);
}

TEST_CASE("stretch keeps a full-span image unchanged") {
  std::mt19937_64 rng(8);
  GrayImage img = random_image(rng, 16, 16);
  img.pixels[0] = 0;
  img.pixels[1] = 255;
  CHECK(contrast_stretch(img, 0.0, 100.0).pixels == img.pixels);
}

TEST_CASE("homomorphic filter validates parameters and handles constants") {
  const GrayImage img(16, 16);
  CHECK_THROWS_AS(homomorphic_filter(img, 0.0, 0.5, 1.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(homomorphic_filter(img, 4.0, 0.0, 1.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(homomorphic_filter(img, 4.0, 1.5, 0.5),
                  std::invalid_argument);

  GrayImage flat(20, 12);
  std::fill(flat.pixels.begin(), flat.pixels.end(), std::uint8_t(64));
  CHECK(homomorphic_filter(flat, 4.0, 0.5, 1.5).pixels == flat.pixels);
}

TEST_CASE("a flat transfer reproduces a full-range input") {
  GrayImage img(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) img.at(x, y) = std::uint8_t((x * 255) / 31);
  const GrayImage out = homomorphic_filter(img, 4.0, 1.0, 1.0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(int(out.pixels[i]) - int(img.pixels[i])) <= 1);
}

namespace {

GrayImage illuminated_checker(int n) {
  GrayImage img(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int ramp = 20 + (x * 215) / (n - 1);
      const int tex = ((x + y) % 2 == 0) ? 20 : -20;
      img.at(x, y) = std::uint8_t(std::clamp(ramp + tex, 0, 255));
    }
  return img;
}

// mean |v - (left+right)/2| over the interior: for an alternating pattern of
// amplitude A riding on a locally linear base this evaluates to 2A.
double second_difference_energy(const std::vector<double>& v, int w, int h) {
  double acc = 0.0;
  long long n = 0;
  for (int y = 2; y < h - 2; ++y)
    for (int x = 2; x < w - 2; ++x) {
      const double c = v[std::size_t(y) * w + x];
      const double l = v[std::size_t(y) * w + x - 1];
      const double r = v[std::size_t(y) * w + x + 1];
      acc += std::abs(c - 0.5 * (l + r));
      ++n;
    }
  return acc / double(n);
}

}  // namespace

TEST_CASE("high-emphasis transfer scales texture by gamma_high in log space") {
  const GrayImage img = illuminated_checker(64);
  const double gl = 0.5, gh = 1.5, f0 = 4.0;
  const std::vector<double> out_log = homomorphic_log_response(img, f0, gl, gh);
  std::vector<double> in_log(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    in_log[i] = std::log1p(double(img.pixels[i]));

  const double a_in = second_difference_energy(in_log, 64, 64);
  const double a_out = second_difference_energy(out_log, 64, 64);
  CHECK(a_out / a_in == Catch::Approx(gh).epsilon(0.2));
}

TEST_CASE("illumination gradient shrinks toward gamma_low in log space") {
  GrayImage ramp(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) ramp.at(x, y) = std::uint8_t(20 + (x * 215) / 63);
  const double gl = 0.5, gh = 1.5, f0 = 4.0;
  const std::vector<double> out_log =
      homomorphic_log_response(ramp, f0, gl, gh);
  std::vector<double> in_log(ramp.pixels.size());
  for (std::size_t i = 0; i < ramp.pixels.size(); ++i)
    in_log[i] = std::log1p(double(ramp.pixels[i]));

  auto col_mean = [&](const std::vector<double>& v, int x) {
    double s = 0.0;
    for (int y = 0; y < 64; ++y) s += v[std::size_t(y) * 64 + x];
    return s / 64.0;
  };
  const double span_in = col_mean(in_log, 55) - col_mean(in_log, 8);
  const double span_out = col_mean(out_log, 55) - col_mean(out_log, 8);
  CHECK(span_out / span_in == Catch::Approx(gl).epsilon(0.2));
}

TEST_CASE("log-domain response matches a Fourier realization") {
  const GrayImage img = illuminated_checker(48);
  const double f0 = 4.0, gl = 0.5, gh = 1.5;
  const std::vector<double> got = homomorphic_log_response(img, f0, gl, gh);
  const std::vector<double> want =
      oracles::dft_homomorphic_log(img, f0, gl, gh);
  REQUIRE(got.size() == want.size());
  double rms = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    rms += (got[i] - want[i]) * (got[i] - want[i]);
  rms = std::sqrt(rms / double(got.size()));
  CHECK(rms <= 1e-3);

  const GrayImage gray_got = homomorphic_filter(img, f0, gl, gh);
  const GrayImage gray_want = oracles::dft_homomorphic_gray(img, f0, gl, gh);
  for (std::size_t i = 0; i < gray_got.pixels.size(); ++i)
    CHECK(std::abs(int(gray_got.pixels[i]) - int(gray_want.pixels[i])) <= 1);
}

TEST_CASE("edge detection validates parameters and ignores flat input") {
  const GrayImage img(16, 16);
  CHECK_THROWS_AS(canny(img, -1.0, 10, 20), std::invalid_argument);
  CHECK_THROWS_AS(canny(img, 1.0, 0.0, 20), std::invalid_argument);
  CHECK_THROWS_AS(canny(img, 1.0, 20, 20), std::invalid_argument);

  GrayImage flat(24, 18);
  std::fill(flat.pixels.begin(), flat.pixels.end(), std::uint8_t(131));
  CHECK(canny(flat, 0.0, 20, 40).count() == 0);
  CHECK(canny(flat, 1.4, 20, 40).count() == 0);
}

TEST_CASE("a vertical step produces one thin response column") {
  GrayImage img(16, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x) img.at(x, y) = std::uint8_t(x < 8 ? 0 : 200);
  const EdgeMap e = canny(img, 0.0, 100, 400);
  CHECK(e.count() == 10);  // one pixel per interior row
  for (int y = 1; y < 11; ++y) {
    int hits = 0, col = -1;
    for (int x = 0; x < 16; ++x)
      if (e.at(x, y)) {
        ++hits;
        col = x;
      }
    CHECK(hits == 1);
    CHECK((col == 7 || col == 8));
  }
  const EdgeMap want = oracles::brute_force_canny(img, 100, 400);
  CHECK(e.mask == want.mask);
}

TEST_CASE("weak edges survive only when chained to a strong seed") {
  // Column step whose contrast ramps with the row: 4A(y) rises from 268
  // to 856, so rows 17..22 clear t_high=700 and rows 1..16 sit between
  // the thresholds, connected to the strong block along the response
  // column.
  GrayImage ramp(24, 24);
  for (int y = 0; y < 24; ++y) {
    const int amp = 60 + 7 * y;
    for (int x = 0; x < 24; ++x)
      ramp.at(x, y) = std::uint8_t(15 + (x >= 12 ? amp : 0));
  }
  const EdgeMap e = canny(ramp, 0.0, 200, 700);
  CHECK(e.count() == 22);
  long long deep_weak = 0;
  for (int y = 1; y <= 10; ++y) deep_weak += e.at(12, y);
  CHECK(deep_weak == 10);
  CHECK(e.mask == oracles::brute_force_canny(ramp, 200, 700).mask);

  // Raising t_high above the peak magnitude removes every seed, and the
  // weak chain must vanish with it.
  const EdgeMap isolated = canny(ramp, 0.0, 200, 950);
  CHECK(isolated.count() == 0);
  CHECK(isolated.mask == oracles::brute_force_canny(ramp, 200, 950).mask);
}

TEST_CASE("edge maps match the brute-force reference on random images") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> tl(20, 80), gap(40, 160);
  for (int i = 0; i < 10; ++i) {
    const GrayImage img = random_image(rng, 16, 16);
    const double t_low = tl(rng), t_high = t_low + gap(rng);
    const EdgeMap got = canny(img, 0.0, t_low, t_high);
    const EdgeMap want = oracles::brute_force_canny(img, t_low, t_high);
    CHECK(got.mask == want.mask);
  }
}

TEST_CASE("edge detection is invariant to a constant brightness shift") {
  std::mt19937_64 rng(10);
  GrayImage img = random_image(rng, 24, 24, 30, 170);
  GrayImage shifted = img;
  for (auto& p : shifted.pixels) p = std::uint8_t(p + 60);
  CHECK(canny(img, 0.0, 40, 90).mask == canny(shifted, 0.0, 40, 90).mask);
  CHECK(canny(img, 1.3, 40, 90).mask == canny(shifted, 1.3, 40, 90).mask);
}

TEST_CASE("every reported edge pixel clears the low threshold") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5; ++i) {
    const GrayImage img = random_image(rng, 20, 20);
    const EdgeMap e = canny(img, 0.0, 60, 150);
    const std::vector<double> mag = oracles::sobel_magnitude(img);
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x)
        if (e.at(x, y)) CHECK(mag[std::size_t(y) * 20 + x] >= 60.0);
  }
}

TEST_CASE("edge overlay partitions pixels by channel membership") {
  EdgeMap nir(8, 4), vis(8, 4);
  nir.at(1, 1) = 1;
  nir.at(2, 1) = 1;
  vis.at(2, 1) = 1;
  vis.at(3, 2) = 1;
  const OverlayMap o = edge_overlay(nir, vis);
  CHECK(o.at(1, 1) == OverlayState::NirOnly);
  CHECK(o.at(2, 1) == OverlayState::Both);
  CHECK(o.at(3, 2) == OverlayState::VisOnly);
  CHECK(o.at(0, 0) == OverlayState::None);

  const OverlayMap swapped = edge_overlay(vis, nir);
  CHECK(swapped.at(1, 1) == OverlayState::VisOnly);
  CHECK(swapped.at(2, 1) == OverlayState::Both);

  const OverlayCounts c = edge_counts(o, Rect{0, 0, 8, 4});
  CHECK(c.nir_only == 1);
  CHECK(c.both == 1);
  CHECK(c.vis_only == 1);
  CHECK(c.none == 32 - 3);

  EdgeMap other(9, 4);
  CHECK_THROWS_AS(edge_overlay(nir, other), std::invalid_argument);
  CHECK_THROWS_AS(edge_counts(o, Rect{0, 0, 9, 4}), std::invalid_argument);
}

TEST_CASE("edge counts are additive over a split region") {
  std::mt19937_64 rng(12);
  const GrayImage a = random_image(rng, 24, 16);
  const GrayImage b = random_image(rng, 24, 16);
  const OverlayMap o =
      edge_overlay(canny(a, 0.0, 40, 90), canny(b, 0.0, 40, 90));
  const OverlayCounts whole = edge_counts(o, Rect{0, 0, 24, 16});
  const OverlayCounts left = edge_counts(o, Rect{0, 0, 12, 16});
  const OverlayCounts right = edge_counts(o, Rect{12, 0, 12, 16});
  CHECK(whole.none == left.none + right.none);
  CHECK(whole.nir_only == left.nir_only + right.nir_only);
  CHECK(whole.vis_only == left.vis_only + right.vis_only);
  CHECK(whole.both == left.both + right.both);
}

TEST_CASE("overlay rendering uses the documented gray levels") {
  EdgeMap nir(4, 1), vis(4, 1);
  nir.at(1, 0) = 1;
  vis.at(2, 0) = 1;
  nir.at(3, 0) = 1;
  vis.at(3, 0) = 1;
  const GrayImage g = overlay_to_gray(edge_overlay(nir, vis));
  CHECK(int(g.pixels[0]) == 255);
  CHECK(int(g.pixels[1]) == 0);
  CHECK(int(g.pixels[2]) == 128);
  CHECK(int(g.pixels[3]) == 0);
}
