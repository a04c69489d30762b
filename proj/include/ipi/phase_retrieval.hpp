#pragma once

// Shape retrieval from a speckle image: autocorrelation cleanup, support
// estimation, Fourier modulus and Fienup's error-reduction iteration.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipi/errors.hpp"
#include "ipi/fft.hpp"
#include "ipi/grid.hpp"
#include "ipi/optics.hpp"
#include "ipi/rng.hpp"

namespace ipi {

enum class BinarizeMethod { Fixed, Otsu };

inline const char* to_string(BinarizeMethod m) { return m == BinarizeMethod::Fixed ? "fixed" : "otsu"; }

inline BinarizeMethod binarize_method_from_string(const std::string& s) {
  if (s == "fixed") return BinarizeMethod::Fixed;
  if (s == "otsu") return BinarizeMethod::Otsu;
  throw std::invalid_argument("unknown binarize method '" + s + "' (expected fixed or otsu)");
}

/// How the object support is derived from the cleaned autocorrelation.
enum class SupportShape {
  /// Autocorrelation support scaled by one half about zero lag. For a
  /// centrosymmetric object S, S - S contains 2S, so this contains S.
  HalfAutocorrelation,
  /// Centered box of half the autocorrelation bounding box.
  Box,
};

inline const char* to_string(SupportShape s) { return s == SupportShape::Box ? "box" : "autocorrelation"; }

inline SupportShape support_shape_from_string(const std::string& s) {
  if (s == "box") return SupportShape::Box;
  if (s == "autocorrelation") return SupportShape::HalfAutocorrelation;
  throw std::invalid_argument("unknown support shape '" + s + "' (expected autocorrelation or box)");
}

struct ERConfig {
  int iterations = 500;
  double support_threshold_rel = 0.001;
  SupportShape support_shape = SupportShape::HalfAutocorrelation;
  Seed init_seed = 0;
  /// Independent random starts; the run with the lowest final E_F is kept.
  int restarts = 4;
  BinarizeMethod binarize_method = BinarizeMethod::Otsu;
  // Stop when E_F moved less than stall_tolerance over stall_window steps.
  double stall_tolerance = 1e-8;
  int stall_window = 20;
};

inline void validate(const ERConfig& c) {
  if (c.iterations < 1) throw std::invalid_argument("ERConfig: iterations must be >= 1");
  if (c.restarts < 1) throw std::invalid_argument("ERConfig: restarts must be >= 1");
  if (!(c.support_threshold_rel > 0.0 && c.support_threshold_rel < 1.0))
    throw std::invalid_argument("ERConfig: support threshold must be in (0, 1)");
}

struct ERResult {
  RealImage reconstruction;
  std::vector<double> error_trace;  ///< E_F(k) of the k-th iterate
  Mask support;
  std::vector<std::vector<double>> restart_traces;  ///< multistart only, in restart order
};

/// |AC| with the zero-lag self term replaced by the largest of its eight
/// neighbours.
inline RealImage clean_autocorrelation(const ACMap& ac) {
  RealImage m = ac.magnitude();
  const std::size_t n = m.rows(), c = n / 2;
  if (n < 3) return m;
  double peak = 0;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc)
      if (dr || dc) peak = std::max(peak, m(c + dr, c + dc));
  m(c, c) = peak;
  return m;
}

namespace detail {

inline double support_peak(const RealImage& ac_clean) {
  if (!ac_clean.square()) throw std::invalid_argument("estimate_support: map must be square");
  const double peak = max_of(ac_clean);
  if (!(peak > 0.0)) throw EmptySupportError("estimate_support: autocorrelation map is all zero");
  return peak;
}

}  // namespace detail

/// Centered box object support from the thresholded autocorrelation: the
/// autocorrelation of a w-wide object spans 2w-1 lags, so the box side is
/// the largest above-threshold lag plus one, plus a one-cell margin.
inline Mask estimate_box_support(const RealImage& ac_clean, double threshold_rel) {
  const double peak = detail::support_peak(ac_clean);
  const long n = static_cast<long>(ac_clean.rows()), c = n / 2;
  long reach_r = 0, reach_c = 0;
  for (long r = 0; r < n; ++r)
    for (long k = 0; k < n; ++k)
      if (ac_clean(static_cast<std::size_t>(r), static_cast<std::size_t>(k)) > threshold_rel * peak) {
        reach_r = std::max(reach_r, std::abs(r - c));
        reach_c = std::max(reach_c, std::abs(k - c));
      }
  const long side_r = std::min(n, reach_r + 2), side_c = std::min(n, reach_c + 2);
  Mask s(ac_clean.rows());
  const long r0 = c - side_r / 2, c0 = c - side_c / 2;
  for (long r = r0; r < r0 + side_r; ++r)
    for (long k = c0; k < c0 + side_c; ++k) s(static_cast<std::size_t>(r), static_cast<std::size_t>(k)) = 1;
  return s;
}

/// Cell c + d is in the support when any lag 2d + e, e in {-1, 0, 1}, is
/// above threshold; the odd lags cover objects centered between cells.
inline Mask estimate_half_autocorrelation_support(const RealImage& ac_clean, double threshold_rel) {
  const double peak = detail::support_peak(ac_clean);
  const long n = static_cast<long>(ac_clean.rows()), c = n / 2;
  auto above = [&](long r, long k) {
    return r >= 0 && r < n && k >= 0 && k < n &&
           ac_clean(static_cast<std::size_t>(r), static_cast<std::size_t>(k)) > threshold_rel * peak;
  };
  Mask s(ac_clean.rows());
  for (long r = 0; r < n; ++r)
    for (long k = 0; k < n; ++k) {
      bool in = false;
      for (long er = -1; er <= 1 && !in; ++er)
        for (long ek = -1; ek <= 1 && !in; ++ek) in = above(c + 2 * (r - c) + er, c + 2 * (k - c) + ek);
      s(static_cast<std::size_t>(r), static_cast<std::size_t>(k)) = in;
    }
  return s;
}

inline Mask estimate_support(const RealImage& ac_clean, double threshold_rel,
                             SupportShape shape = SupportShape::HalfAutocorrelation) {
  if (!(threshold_rel > 0.0 && threshold_rel < 1.0))
    throw std::invalid_argument("estimate_support: threshold must be in (0, 1)");
  return shape == SupportShape::Box ? estimate_box_support(ac_clean, threshold_rel)
                                    : estimate_half_autocorrelation_support(ac_clean, threshold_rel);
}

struct ModulusMap {
  RealImage values;  ///< DFT layout (zero frequency at (0, 0))
  std::size_t clamped = 0;
};

/// M = sqrt(max(Re DFT(ac), 0)) for a centered autocorrelation map. Real
/// parts below -1e-9 of the largest magnitude count as clamped; smaller
/// excursions are rounding.
inline ModulusMap fourier_modulus(const RealImage& ac_centered) {
  const ComplexImage ft = fft::forward(fft::ifftshift(ac_centered));
  double scale = 0;
  for (const auto& z : ft) scale = std::max(scale, std::abs(z.real()));
  ModulusMap out{RealImage(ft.rows(), ft.cols()), 0};
  for (std::size_t i = 0; i < ft.size(); ++i) {
    const double re = ft.data()[i].real();
    if (re < -1e-9 * scale) ++out.clamped;
    out.values.data()[i] = std::sqrt(std::max(re, 0.0));
  }
  return out;
}

/// Fourier-domain error ||G| - M|| / ||M||.
inline double fourier_error(const ComplexImage& spectrum, const RealImage& modulus) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const double d = std::abs(spectrum.data()[i]) - modulus.data()[i];
    num += d * d;
    den += modulus.data()[i] * modulus.data()[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Error-reduction: alternate the Fourier-modulus projection with the
/// object-domain projection onto real, nonnegative, in-support images.
inline ERResult error_reduction(const RealImage& modulus, const Mask& support, const ERConfig& config) {
  validate(config);
  if (!modulus.same_shape(support)) throw std::invalid_argument("error_reduction: modulus and support differ in size");
  if (count_nonzero(support) == 0) throw std::invalid_argument("error_reduction: support is empty");

  ERResult res{RealImage(modulus.rows(), modulus.cols()), {}, support, {}};
  Rng rng(config.init_seed);
  ComplexImage g(modulus.rows(), modulus.cols());
  for (std::size_t i = 0; i < g.size(); ++i)
    if (support.data()[i]) g.data()[i] = uniform01(rng);

  const std::size_t count = g.size();
  const double inv_count = 1.0 / static_cast<double>(count);
  double norm_m = 0;
  for (double m : modulus) norm_m += m * m;
  norm_m = norm_m > 0 ? std::sqrt(norm_m) : 1.0;

  res.error_trace.reserve(static_cast<std::size_t>(config.iterations));
  for (int k = 0; k < config.iterations; ++k) {
    fft::detail::execute_in_place(g, FFTW_FORWARD);
    double resid = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const double m = modulus.data()[i];
      auto& z = g.data()[i];
      const double a = std::abs(z);
      resid += (a - m) * (a - m);
      z = m == 0.0 ? std::complex<double>{} : (a > 0.0 ? z * (m / a) : std::complex<double>{m, 0.0});
    }
    res.error_trace.push_back(std::sqrt(resid) / norm_m);
    fft::detail::execute_in_place(g, FFTW_BACKWARD);
    for (std::size_t i = 0; i < count; ++i) {
      const double re = g.data()[i].real() * inv_count;
      g.data()[i] = support.data()[i] && re > 0.0 ? re : 0.0;
    }
    const auto& tr = res.error_trace;
    if (static_cast<int>(tr.size()) > config.stall_window &&
        std::abs(tr.back() - tr[tr.size() - 1 - static_cast<std::size_t>(config.stall_window)]) <
            config.stall_tolerance)
      break;
  }
  for (std::size_t i = 0; i < count; ++i) res.reconstruction.data()[i] = g.data()[i].real();
  return res;
}

/// Seed of the k-th restart; restart 0 uses init_seed itself.
inline Seed restart_seed(Seed init_seed, int k) { return k == 0 ? init_seed : derive_seed(init_seed, k, 0x45525253); }

/// config.restarts independent error-reduction runs; returns the one with
/// the lowest final E_F (earliest on ties).
inline ERResult error_reduction_multistart(const RealImage& modulus, const Mask& support, const ERConfig& config) {
  validate(config);
  ERResult best;
  std::vector<std::vector<double>> traces;
  for (int k = 0; k < config.restarts; ++k) {
    ERConfig one = config;
    one.init_seed = restart_seed(config.init_seed, k);
    ERResult r = error_reduction(modulus, support, one);
    traces.push_back(r.error_trace);
    if (k == 0 || r.error_trace.back() < best.error_trace.back()) best = std::move(r);
  }
  best.restart_traces = std::move(traces);
  return best;
}

namespace detail {

// Otsu threshold over the given samples: the largest value of the lower
// class at the split maximizing between-class variance.
inline double otsu_threshold(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double total = 0;
  for (double x : v) total += x;
  double best_score = -1, best_t = v.back(), low_sum = 0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    low_sum += v[i];
    if (v[i] == v[i + 1]) continue;
    const double w0 = static_cast<double>(i + 1) / n, w1 = 1 - w0;
    const double mu0 = low_sum / static_cast<double>(i + 1), mu1 = (total - low_sum) / (n - static_cast<double>(i + 1));
    const double score = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (score > best_score) best_score = score, best_t = v[i];
  }
  return best_t;
}

}  // namespace detail

inline Mask binarize(const RealImage& recon, BinarizeMethod method) {
  const double mx = max_of(recon);
  if (!(mx > 0.0)) throw EmptyMaskError("binarize: reconstruction is all zero");
  Mask out(recon.rows(), recon.cols());
  if (method == BinarizeMethod::Fixed) {
    for (std::size_t i = 0; i < recon.size(); ++i) out.data()[i] = recon.data()[i] >= 0.5 * mx;
    return out;
  }
  std::vector<double> nz;
  for (double v : recon)
    if (v > 0.0) nz.push_back(v);
  const bool single_level = std::all_of(nz.begin(), nz.end(), [&](double v) { return v == nz.front(); });
  const double t = single_level ? 0.0 : detail::otsu_threshold(nz);
  for (std::size_t i = 0; i < recon.size(); ++i) out.data()[i] = recon.data()[i] > t;
  return out;
}

// ---------------------------------------------------------------------------
// Pipelines

struct Reconstruction {
  ERResult er;
  Mask mask;
  std::size_t clamped = 0;
};

/// speckle -> autocorrelation -> cleanup -> support + modulus -> ER -> mask.
inline Reconstruction reconstruct_from_speckle(const RealImage& speckle, const ERConfig& config) {
  validate(config);
  const RealImage ac = clean_autocorrelation(autocorrelation_map(speckle));
  const Mask support = estimate_support(ac, config.support_threshold_rel, config.support_shape);
  const ModulusMap mod = fourier_modulus(ac);
  Reconstruction r{error_reduction_multistart(mod.values, support, config), {}, mod.clamped};
  r.mask = binarize(r.er.reconstruction, config.binarize_method);
  return r;
}

/// Circular autocorrelation of a real image via the DFT, zero lag centered.
inline RealImage exact_autocorrelation(const RealImage& img) {
  ComplexImage ft = fft::forward(img);
  for (auto& z : ft) z = std::norm(z);
  const ComplexImage ac = fft::inverse(std::move(ft));
  RealImage out(img.rows(), img.cols());
  std::transform(ac.begin(), ac.end(), out.begin(), [](const auto& z) { return z.real(); });
  return fft::fftshift(out);
}

/// Exact-data route: the modulus is taken from the true autocorrelation of
/// `object`, the support from its cleaned magnitude.
inline Reconstruction reconstruct_from_object(const RealImage& object, const ERConfig& config) {
  validate(config);
  const RealImage ac = exact_autocorrelation(object);
  ACMap acm{ComplexImage(ac.rows(), ac.cols())};
  std::copy(ac.begin(), ac.end(), acm.values.begin());
  const Mask support = estimate_support(clean_autocorrelation(acm), config.support_threshold_rel, config.support_shape);
  const ModulusMap mod = fourier_modulus(ac);
  Reconstruction r{error_reduction_multistart(mod.values, support, config), {}, mod.clamped};
  r.mask = binarize(r.er.reconstruction, config.binarize_method);
  return r;
}

}  // namespace ipi
