#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipi/errors.hpp"
#include "ipi/fft.hpp"
#include "ipi/grid.hpp"

namespace ipi {

template <class A, class B>
double mse(const Image<A>& a, const Image<B>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse: dimension mismatch");
  if (a.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

inline double iou(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("iou: dimension mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.data()[i] != 0, y = b.data()[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  if (uni == 0) throw UndefinedMetricError("iou: both masks are empty");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Maps the truth onto the reconstruction: recon(x) ~ O(truth)(x - shift),
/// where O is the identity or the cyclic point reflection x -> -x.
struct AlignTransform {
  bool reflected = false;
  long shift_row = 0;
  long shift_col = 0;

  std::string str() const {
    std::ostringstream os;
    os << (reflected ? "reflect" : "identity") << '+' << shift_row << ',' << shift_col;
    return os.str();
  }
  friend bool operator==(const AlignTransform&, const AlignTransform&) = default;
};

inline Mask apply(const AlignTransform& t, const Mask& m) {
  return cyclic_shift(t.reflected ? point_reflect(m) : m, t.shift_row, t.shift_col);
}

struct AlignedIou {
  double iou = 0.0;
  AlignTransform transform;
};

/// Maximum IoU over {identity, point reflection} x all cyclic shifts of the
/// truth. Overlap counts for every shift come from one FFT cross-correlation
/// per orientation; ties go to identity, then the lexicographically smallest
/// shift.
inline AlignedIou best_aligned_iou(const Mask& recon, const Mask& truth) {
  if (!recon.same_shape(truth)) throw std::invalid_argument("best_aligned_iou: dimension mismatch");
  const std::size_t na = count_nonzero(recon), nb = count_nonzero(truth);
  if (na + nb == 0) throw UndefinedMetricError("best_aligned_iou: both masks are empty");
  auto to_real = [](const Mask& m) {
    RealImage r(m.rows(), m.cols());
    std::transform(m.begin(), m.end(), r.begin(), [](auto v) { return v ? 1.0 : 0.0; });
    return r;
  };
  const ComplexImage fr = fft::forward(to_real(recon));
  AlignedIou best{-1.0, {}};
  long best_overlap = -1;
  for (bool reflected : {false, true}) {
    ComplexImage prod = fft::forward(to_real(reflected ? point_reflect(truth) : truth));
    for (std::size_t i = 0; i < prod.size(); ++i) prod.data()[i] = fr.data()[i] * std::conj(prod.data()[i]);
    const ComplexImage xc = fft::inverse(std::move(prod));
    for (std::size_t r = 0; r < xc.rows(); ++r)
      for (std::size_t c = 0; c < xc.cols(); ++c) {
        const long overlap = std::lround(xc(r, c).real());
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best.transform = {reflected, static_cast<long>(r), static_cast<long>(c)};
        }
      }
  }
  const auto inter = static_cast<std::size_t>(best_overlap);
  best.iou = static_cast<double>(inter) / static_cast<double>(na + nb - inter);
  return best;
}

/// truth - recon after each is scaled to a maximum of 1; values in [-1, 1].
template <class A, class B>
RealImage difference_image(const Image<A>& truth, const Image<B>& recon) {
  if (!truth.same_shape(recon)) throw std::invalid_argument("difference_image: dimension mismatch");
  auto peak = [](const auto& img) {
    double m = 0;
    for (auto v : img) m = std::max(m, static_cast<double>(v));
    return m;
  };
  const double pt = peak(truth), pr = peak(recon);
  RealImage d(truth.rows(), truth.cols());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = pt > 0 ? static_cast<double>(truth.data()[i]) / pt : 0.0;
    const double r = pr > 0 ? static_cast<double>(recon.data()[i]) / pr : 0.0;
    d.data()[i] = std::clamp(t - r, -1.0, 1.0);
  }
  return d;
}

/// 8-bit rendering of a difference image: -1 -> 0, 0 -> 128, +1 -> 255.
inline Image<std::uint8_t> render_difference(const RealImage& diff) {
  Image<std::uint8_t> out(diff.rows(), diff.cols());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    const double v = std::clamp(diff.data()[i], -1.0, 1.0);
    const double level = v >= 0 ? 128.0 + 127.0 * v : 128.0 + 128.0 * v;
    out.data()[i] = static_cast<std::uint8_t>(std::lround(level));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct EvalRow {
  std::string id;
  std::string family;
  std::string method;
  double iou = 0.0;
  double aligned_iou = 0.0;
  double mse = 0.0;
  std::string transform;
};

inline void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows) {
  os << "id,family,method,iou,aligned_iou,mse,transform\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.id << ',' << r.family << ',' << r.method << ',' << r.iou << ',' << r.aligned_iou << ',' << r.mse << ','
       << r.transform << '\n';
}

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0, median = 0, std = 0;
};

inline SummaryStats summarize(std::vector<double> v) {
  SummaryStats s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2;
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

/// One row per (family, method): count and mean/median/std of aligned IoU
/// and MSE.
inline void write_family_summary_csv(std::ostream& os, const std::vector<EvalRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : rows) {
    auto& g = groups[{r.family, r.method}];
    g.first.push_back(r.aligned_iou);
    g.second.push_back(r.mse);
  }
  os << "family,method,count,aligned_iou_mean,aligned_iou_median,aligned_iou_std,mse_mean,mse_median,mse_std\n";
  os.precision(10);
  for (const auto& [key, g] : groups) {
    const auto a = summarize(g.first), m = summarize(g.second);
    os << key.first << ',' << key.second << ',' << a.count << ',' << a.mean << ',' << a.median << ',' << a.std << ','
       << m.mean << ',' << m.median << ',' << m.std << '\n';
  }
}

}  // namespace ipi
