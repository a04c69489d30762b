#pragma once

// Point-emitter speckle model: each asperity radiates a·e^{iφ}; the recorded
// out-of-focus interferogram is the squared modulus of the DFT of the
// emitter field, so its inverse DFT is the field autocorrelation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ipi/fft.hpp"
#include "ipi/grid.hpp"
#include "ipi/rng.hpp"

namespace ipi {

struct Asperity {
  int u = 0;  ///< object-grid row
  int v = 0;  ///< object-grid column
  double phase = 0.0;
  double amplitude = 1.0;
};

struct AsperitySet {
  std::size_t object_n = 0;
  std::vector<Asperity> items;

  std::size_t size() const { return items.size(); }
};

/// Recording geometry. Sensor and objective fields are carried as metadata;
/// the forward model is the discrete Fourier relation alone.
struct OpticsConfig {
  std::size_t image_n = 256;
  std::size_t object_n = 128;
  std::size_t sensor_width_px = 1545;
  std::size_t sensor_height_px = 1164;
  double pixel_pitch_um = 6.45;
  double objective_focal_mm = 80.0;
};

struct NoiseConfig {
  double gaussian_sigma_rel = 0.0;  ///< sigma as a fraction of the image mean
  double shot_scale = 0.0;          ///< photons at the image maximum, 0 disables
  int quantize_bits = 0;            ///< 0 (off), 8 or 16
  Seed seed = 0;

  bool is_identity() const { return gaussian_sigma_rel == 0.0 && shot_scale == 0.0 && quantize_bits == 0; }
};

inline void validate(const NoiseConfig& c) {
  if (!(c.gaussian_sigma_rel >= 0.0) || !(c.shot_scale >= 0.0))
    throw std::invalid_argument("NoiseConfig: sigma and shot scale must be nonnegative");
  if (c.quantize_bits != 0 && c.quantize_bits != 8 && c.quantize_bits != 16)
    throw std::invalid_argument("NoiseConfig: quantize_bits must be 0, 8 or 16");
}

inline constexpr double kDefaultDensity = 0.5;

/// Selects each filled cell with probability `density` and gives it an
/// i.i.d. phase in [0, 2π). An empty draw is retried with seed + 1.
inline AsperitySet sample_asperities(const Mask& mask, double density, Seed seed) {
  if (!mask.square()) throw std::invalid_argument("sample_asperities: mask must be square");
  if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("sample_asperities: density must be in (0, 1]");
  if (count_nonzero(mask) == 0) throw std::invalid_argument("sample_asperities: mask is empty");
  for (Seed s = seed;; ++s) {
    Rng rng(s);
    AsperitySet out{mask.rows(), {}};
    for (std::size_t r = 0; r < mask.rows(); ++r)
      for (std::size_t c = 0; c < mask.cols(); ++c) {
        if (!mask(r, c)) continue;
        const double pick = uniform01(rng);
        const double phase = 2 * std::numbers::pi * uniform01(rng);
        if (pick < density) out.items.push_back({static_cast<int>(r), static_cast<int>(c), phase, 1.0});
      }
    if (!out.items.empty()) return out;
  }
}

/// Complex emitter field on the image frame, object grid centered.
inline ComplexImage emitter_field(const AsperitySet& asp, std::size_t image_n) {
  if (asp.object_n > image_n) throw std::invalid_argument("emitter_field: object grid larger than image");
  ComplexImage g(image_n);
  const std::size_t off = (image_n - asp.object_n) / 2;
  for (const auto& a : asp.items)
    g(off + static_cast<std::size_t>(a.u), off + static_cast<std::size_t>(a.v)) += std::polar(a.amplitude, a.phase);
  return g;
}

/// Largest side of the asperity bounding box, in cells.
inline std::size_t support_side(const AsperitySet& asp) {
  if (asp.items.empty()) return 0;
  auto [umin, umax] = std::minmax_element(asp.items.begin(), asp.items.end(),
                                          [](const auto& a, const auto& b) { return a.u < b.u; });
  auto [vmin, vmax] = std::minmax_element(asp.items.begin(), asp.items.end(),
                                          [](const auto& a, const auto& b) { return a.v < b.v; });
  return static_cast<std::size_t>(std::max(umax->u - umin->u, vmax->v - vmin->v) + 1);
}

/// I = |DFT(g)|^2, unnormalized forward transform.
inline RealImage synthesize_speckle(const AsperitySet& asp, const OpticsConfig& optics) {
  if (!is_power_of_two(optics.image_n)) throw std::invalid_argument("synthesize_speckle: image_n must be a power of two");
  if (asp.items.empty()) throw std::invalid_argument("synthesize_speckle: no asperities");
  const std::size_t side = support_side(asp);
  if (2 * side > optics.image_n || asp.object_n > optics.image_n) {
    std::size_t need = 1;
    while (need < std::max(2 * side, asp.object_n)) need <<= 1;
    std::ostringstream os;
    os << "synthesize_speckle: support of " << side << " cells aliases in a " << optics.image_n
       << "-pixel image; image_n must be at least " << need;
    throw std::invalid_argument(os.str());
  }
  const ComplexImage spectrum = fft::forward(emitter_field(asp, optics.image_n));
  RealImage out(optics.image_n);
  std::transform(spectrum.begin(), spectrum.end(), out.begin(), [](const auto& z) { return std::norm(z); });
  return out;
}

inline double mean_of(const RealImage& img) {
  if (img.empty()) return 0.0;
  double s = 0;
  for (double v : img) s += v;
  return s / static_cast<double>(img.size());
}

inline double max_of(const RealImage& img) {
  return img.empty() ? 0.0 : *std::max_element(img.begin(), img.end());
}

/// Shot noise, then additive Gaussian noise (clamped at zero), then midtread
/// quantization, each stage only when enabled.
inline RealImage add_noise(const RealImage& img, const NoiseConfig& noise) {
  validate(noise);
  if (noise.is_identity()) return img;
  RealImage out = img;
  Rng rng(noise.seed);
  const double mean0 = mean_of(img);
  if (noise.shot_scale > 0.0) {
    const double mx = max_of(out);
    if (mx > 0.0) {
      const double gain = noise.shot_scale / mx;
      for (double& v : out) {
        const double lambda = std::max(v, 0.0) * gain;
        v = lambda > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(lambda)(rng)) / gain : 0.0;
      }
    }
  }
  if (noise.gaussian_sigma_rel > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise.gaussian_sigma_rel * mean0);
    for (double& v : out) v = std::max(0.0, v + gauss(rng));
  }
  if (noise.quantize_bits > 0) {
    const double mx = max_of(out);
    const double levels = std::ldexp(1.0, noise.quantize_bits) - 1.0;
    if (mx > 0.0)
      for (double& v : out) v = std::round(v / mx * levels) * mx / levels;
  }
  return out;
}

/// Inverse DFT of a speckle image with zero lag moved to (n/2, n/2).
struct ACMap {
  ComplexImage values;

  std::size_t n() const { return values.rows(); }
  RealImage magnitude() const {
    RealImage m(values.rows(), values.cols());
    std::transform(values.begin(), values.end(), m.begin(), [](const auto& z) { return std::abs(z); });
    return m;
  }
  std::complex<double> center() const { return values(values.rows() / 2, values.cols() / 2); }
};

inline ACMap autocorrelation_map(const RealImage& img) {
  if (!img.square()) throw std::invalid_argument("autocorrelation_map: image must be square");
  return {fft::fftshift(fft::inverse(img))};
}

}  // namespace ipi
