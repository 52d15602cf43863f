#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "uwimg/geometry.hpp"
#include "uwimg/image.hpp"
#include "uwimg/scene_model.hpp"
#include "uwimg/water_optics.hpp"

namespace uwimg {

struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sensor/readout settings shared by both channels. The NIR misalignment maps
// reference-grid pixels to NIR-render pixels (filter swap drift plus the
// differing intrinsics, folded into one homography).
struct AcquisitionModel {
  double gain = 255.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  Homography nir_misalignment;
  double interface_transmittance = 1.0;
};

inline void check_acquisition(const AcquisitionModel& acq) {
  if (!(acq.gain > 0)) throw ConfigurationError("gain must be positive");
  if (acq.noise_sigma < 0)
    throw ConfigurationError("noise_sigma must be nonnegative");
  if (!(acq.interface_transmittance > 0 && acq.interface_transmittance <= 1.0))
    throw ConfigurationError("interface_transmittance must be in (0,1]");
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Standard normal draw keyed by (seed, index); independent of evaluation
// order, so any pixel partition yields the same image.
inline double gaussian_at(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t h1 = splitmix64(seed ^ splitmix64(index));
  const std::uint64_t h2 = splitmix64(h1);
  const double u1 = ((h1 >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  const double u2 = ((h2 >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Radiance arriving at the sensor for one band: two-way attenuated direct
// reflection (colocated light) plus saturating backscatter veiling, both
// after the viewport glass.
inline RadianceImage render_channel(const SceneSpec& scene,
                                    const ChannelBand& band,
                                    const WaterBody& water,
                                    double interface_transmittance = 1.0) {
  const auto issues = validate_scene(scene);
  if (!issues.empty())
    throw ConfigurationError("invalid scene: " + issues.front().where + ": " +
                             issues.front().message);
  if (!water.has_band(band.name))
    throw ConfigurationError("water has no coefficients for band " +
                             band.name);
  if (!(interface_transmittance > 0 && interface_transmittance <= 1.0))
    throw ConfigurationError("interface_transmittance must be in (0,1]");

  const BandOptics& optics = water.optics_for(band.name);
  const double b = optics.coefficients.scattering;
  const double c = beam_attenuation(optics.coefficients);
  const double tau2 = interface_transmittance * interface_transmittance;
  const double p_band = scene.light.power_for(band.name);
  const double bsf = backscatter_fraction(water.phase);

  const std::vector<int> cover = coverage_map(scene);
  RadianceImage out(scene.width, scene.height);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      const int idx = cover[static_cast<std::size_t>(y) * scene.width + x];
      double r, rho;
      if (idx >= 0) {
        const SceneObject& o = scene.objects[static_cast<std::size_t>(idx)];
        r = o.distance_m;
        const double u = (x - o.rect.x + 0.5) / o.rect.w;
        const double v = (y - o.rect.y + 0.5) / o.rect.h;
        rho = texture_value(o.material, band, u, v);
      } else {
        r = scene.background.distance_m;
        const double u = (x + 0.5) / scene.width;
        const double v = (y + 0.5) / scene.height;
        rho = texture_value(scene.background.material, band, u, v);
      }
      double direct, veiling;
      if (c == 0.0) {
        direct = p_band * rho * tau2;
        veiling = 0.0;
      } else {
        direct = p_band * rho * std::exp(-c * 2.0 * r) * tau2;
        veiling = optics.ambient_veiling * (b / c) * bsf *
                  (1.0 - std::exp(-c * r));
      }
      out.at(x, y) = direct + veiling;
    }
  }
  return out;
}

// 8-bit conversion: clamp(floor(gain*value + noise + 0.5), 0, 255) with
// hash-keyed Gaussian noise, so equal seeds give bit-identical images.
inline GrayImage quantize(const RadianceImage& img,
                          const AcquisitionModel& acq) {
  check_acquisition(acq);
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    double v = acq.gain * img.values[i];
    if (acq.noise_sigma > 0)
      v += acq.noise_sigma * gaussian_at(acq.seed, static_cast<std::uint64_t>(i));
    out.pixels[i] = to_gray_level(v);
  }
  return out;
}

struct AcquiredPair {
  GrayImage vis;
  GrayImage nir;
  Homography true_h;
};

// Sequential two-channel acquisition: VIS on the reference grid, NIR warped
// by the misalignment homography before quantization. The returned true_h is
// that same homography, for registration evaluation.
inline AcquiredPair acquire_pair(const SceneSpec& scene,
                                 const WaterBody& water,
                                 const AcquisitionModel& acq) {
  check_acquisition(acq);
  const ChannelBand* vis = nullptr;
  const ChannelBand* nir = nullptr;
  for (const auto& bd : scene.bands) {
    if (bd.name == "VIS") vis = &bd;
    if (bd.name == "NIR") nir = &bd;
  }
  if (!vis || !nir)
    throw ConfigurationError("scene must declare both VIS and NIR bands");

  const RadianceImage vis_rad =
      render_channel(scene, *vis, water, acq.interface_transmittance);
  const RadianceImage nir_rad =
      render_channel(scene, *nir, water, acq.interface_transmittance);
  const RadianceImage nir_shifted =
      resample_bilinear(nir_rad, acq.nir_misalignment);

  AcquisitionModel nir_acq = acq;
  nir_acq.seed = splitmix64(acq.seed);

  AcquiredPair out{quantize(vis_rad, acq), quantize(nir_shifted, nir_acq),
                   acq.nir_misalignment};
  return out;
}

}  // namespace uwimg
