#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "ipi/grid.hpp"

namespace ipi::fft {

namespace detail {

// FFTW's planner is not reentrant; execution of an existing plan on new
// arrays is. Plans are created once per shape with FFTW_ESTIMATE so the
// chosen algorithm, hence every output bit, does not depend on timing.
// Image storage is 64-byte aligned, matching the planning buffer.
inline fftw_plan plan_for(std::size_t rows, std::size_t cols, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(rows, cols, sign);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  ComplexImage scratch(rows, cols);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan p = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, sign, FFTW_ESTIMATE);
  if (!p) throw std::runtime_error("fftw: planning failed");
  cache.emplace(key, p);
  return p;
}

inline void execute_in_place(ComplexImage& img, int sign) {
  if (img.empty()) return;
  fftw_plan p = plan_for(img.rows(), img.cols(), sign);
  auto* buf = reinterpret_cast<fftw_complex*>(img.data());
  if (fftw_alignment_of(reinterpret_cast<double*>(buf)) != 0)
    throw std::logic_error("fftw: buffer is not SIMD aligned");
  fftw_execute_dft(p, buf, buf);
}

}  // namespace detail

/// Unnormalized forward DFT, exponent sign -1.
inline ComplexImage forward(ComplexImage img) {
  detail::execute_in_place(img, FFTW_FORWARD);
  return img;
}

inline ComplexImage forward(const RealImage& img) {
  ComplexImage c(img.rows(), img.cols());
  std::copy(img.begin(), img.end(), c.begin());
  return forward(std::move(c));
}

/// Inverse DFT with the 1/(rows*cols) normalization.
inline ComplexImage inverse(ComplexImage img) {
  detail::execute_in_place(img, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(img.size());
  for (auto& v : img) v *= scale;
  return img;
}

inline ComplexImage inverse(const RealImage& img) {
  ComplexImage c(img.rows(), img.cols());
  std::copy(img.begin(), img.end(), c.begin());
  return inverse(std::move(c));
}

/// Moves the zero-frequency (zero-lag) element from (0, 0) to (rows/2, cols/2).
template <class T>
Image<T> fftshift(const Image<T>& img) {
  return cyclic_shift(img, static_cast<long>(img.rows() / 2), static_cast<long>(img.cols() / 2));
}

template <class T>
Image<T> ifftshift(const Image<T>& img) {
  return cyclic_shift(img, -static_cast<long>(img.rows() / 2), -static_cast<long>(img.cols() / 2));
}

}  // namespace ipi::fft
