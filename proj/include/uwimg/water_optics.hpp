#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwimg {

// A named acquisition band with its wavelength support, in nanometers.
struct ChannelBand {
  std::string name;
  double lambda_min_nm = 0;
  double lambda_peak_nm = 0;
  double lambda_max_nm = 0;
};

inline ChannelBand make_band(std::string name, double lambda_min,
                             double lambda_peak, double lambda_max) {
  if (!(lambda_min > 0 && lambda_min < lambda_peak &&
        lambda_peak < lambda_max))
    throw std::invalid_argument(
        "ChannelBand: requires 0 < lambda_min < lambda_peak < lambda_max");
  return ChannelBand{std::move(name), lambda_min, lambda_peak, lambda_max};
}

// Near infrared: long-pass filtered, LED emission peaking at 850 nm.
inline ChannelBand nir_band() { return make_band("NIR", 750.0, 850.0, 1400.0); }

// Visible: warm-white LED illumination; the peak is a mid-band placeholder.
inline ChannelBand vis_band() { return make_band("VIS", 380.0, 550.0, 780.0); }

// Band-effective absorption a and scattering b, both 1/m.
struct OpticalCoefficients {
  double absorption = 0.0;
  double scattering = 0.0;
};

inline OpticalCoefficients make_coefficients(double a, double b) {
  if (a < 0 || b < 0)
    throw std::invalid_argument(
        "OpticalCoefficients: absorption and scattering must be >= 0");
  return OpticalCoefficients{a, b};
}

// Henyey-Greenstein asymmetry parameter; g = 0 is isotropic.
struct PhaseFunction {
  double g = 0.0;
};

inline PhaseFunction make_phase(double g) {
  if (!(g > -1.0 && g < 1.0))
    throw std::invalid_argument("PhaseFunction: requires -1 < g < 1");
  return PhaseFunction{g};
}

struct BandOptics {
  OpticalCoefficients coefficients;
  double ambient_veiling = 0.0;  // relative radiance feeding backscatter
};

// Per-band water description keyed by channel name.
struct WaterBody {
  std::map<std::string, BandOptics> bands;
  PhaseFunction phase{0.0};

  bool has_band(const std::string& name) const { return bands.count(name) != 0; }

  const BandOptics& optics_for(const std::string& name) const {
    auto it = bands.find(name);
    if (it == bands.end())
      throw std::runtime_error("WaterBody: no coefficients for band " + name);
    return it->second;
  }
};

// Beam attenuation c = a + b.
inline double beam_attenuation(const OpticalCoefficients& k) {
  return k.absorption + k.scattering;
}

// Transmission after a path of r meters through water with attenuation c,
// in percent of the source radiance.
inline double transmission(double c, double r) {
  if (c < 0 || r < 0)
    throw std::invalid_argument("transmission: c and r must be nonnegative");
  return std::exp(-c * r) * 100.0;
}

inline double transmission_from_radiance(double l0, double lr) {
  if (l0 <= 0)
    throw std::invalid_argument(
        "transmission_from_radiance: source radiance must be positive");
  if (lr < 0 || lr > l0)
    throw std::invalid_argument(
        "transmission_from_radiance: requires 0 <= Lr <= L0");
  return lr / l0 * 100.0;
}

// Henyey-Greenstein density per steradian at scattering angle theta.
// Integrates to 1 over the full sphere.
inline double phase_value(const PhaseFunction& phase, double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    throw std::invalid_argument("phase_value: theta must be in [0, pi]");
  const double g = phase.g;
  const double d = 1.0 + g * g - 2.0 * g * std::cos(theta);
  return (1.0 - g * g) / (4.0 * std::numbers::pi * std::pow(d, 1.5));
}

// Fraction of scattered power going into the rear hemisphere (theta > pi/2).
// Closed form of the HG integral; 0.5 at g = 0, -> 0 as g -> 1.
inline double backscatter_fraction(const PhaseFunction& phase) {
  const double g = phase.g;
  if (std::abs(g) < 1e-12) return 0.5;
  return (1.0 - g * g) / (2.0 * g) *
         (1.0 / std::sqrt(1.0 + g * g) - 1.0 / (1.0 + g));
}

// Inland/tap water: isotropic scattering, strong NIR absorption, strong VIS
// scattering. Values are tuned configuration, not measurements.
inline WaterBody natural_water() {
  WaterBody w;
  w.phase = PhaseFunction{0.0};
  w.bands["VIS"] = BandOptics{make_coefficients(0.18, 0.55), 0.55};
  w.bands["NIR"] = BandOptics{make_coefficients(1.40, 0.10), 0.18};
  return w;
}

// Clear water: little suspended matter, forward-peaked scattering.
inline WaterBody clear_water() {
  WaterBody w;
  w.phase = PhaseFunction{0.8};
  w.bands["VIS"] = BandOptics{make_coefficients(0.05, 0.08), 0.06};
  w.bands["NIR"] = BandOptics{make_coefficients(2.30, 0.03), 0.02};
  return w;
}

// Expected qualitative orderings between the NIR and VIS coefficients.
// Returns human-readable violations; empty means the orderings hold (or a
// band is missing, in which case there is nothing to compare).
inline std::vector<std::string> check_band_orderings(const WaterBody& w) {
  std::vector<std::string> out;
  if (!w.has_band("NIR") || !w.has_band("VIS")) return out;
  const auto& nir = w.optics_for("NIR").coefficients;
  const auto& vis = w.optics_for("VIS").coefficients;
  if (!(nir.absorption > vis.absorption))
    out.push_back("expected a(NIR) > a(VIS)");
  if (!(vis.scattering > nir.scattering))
    out.push_back("expected b(VIS) > b(NIR)");
  return out;
}

}  // namespace uwimg
