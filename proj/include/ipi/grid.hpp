#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <new>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipi {

/// 64-byte aligned storage so every raster satisfies SIMD FFT alignment.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

/// Dense row-major raster. Element (r, c) lives at r * cols + c. Masks index
/// rows by the first in-plane coordinate (x for XY views).
template <class T>
class Image {
public:
  using value_type = T;

  Image() = default;
  Image(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  explicit Image(std::size_t n) : Image(n, n) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  using storage_type = std::vector<T, AlignedAllocator<T>>;
  storage_type& values() noexcept { return data_; }
  const storage_type& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool same_shape(const Image& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  template <class U>
  bool same_shape(const Image<U>& o) const noexcept {
    return rows_ == o.rows() && cols_ == o.cols();
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T, AlignedAllocator<T>> data_;
};

using RealImage = Image<double>;
using ComplexImage = Image<std::complex<double>>;
/// Binary raster, cells are 0 or 1.
using Mask = Image<std::uint8_t>;

inline std::size_t count_nonzero(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Inclusive bounding box of nonzero cells.
struct BoundingBox {
  long r0 = 0, r1 = -1, c0 = 0, c1 = -1;
  bool empty() const { return r1 < r0; }
  long height() const { return empty() ? 0 : r1 - r0 + 1; }
  long width() const { return empty() ? 0 : c1 - c0 + 1; }
};

template <class T>
BoundingBox bounding_box(const Image<T>& img) {
  BoundingBox b{static_cast<long>(img.rows()), -1, static_cast<long>(img.cols()), -1};
  for (std::size_t r = 0; r < img.rows(); ++r)
    for (std::size_t c = 0; c < img.cols(); ++c)
      if (img(r, c) != T{}) {
        b.r0 = std::min<long>(b.r0, static_cast<long>(r));
        b.r1 = std::max<long>(b.r1, static_cast<long>(r));
        b.c0 = std::min<long>(b.c0, static_cast<long>(c));
        b.c1 = std::max<long>(b.c1, static_cast<long>(c));
      }
  if (b.r1 < 0) return BoundingBox{};
  return b;
}

/// Cyclic point reflection x -> -x (mod n) in both axes.
template <class T>
Image<T> point_reflect(const Image<T>& img) {
  Image<T> out(img.rows(), img.cols());
  const std::size_t R = img.rows(), C = img.cols();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out((R - r) % R, (C - c) % C) = img(r, c);
  return out;
}

/// Cyclic translation: out(r + dr, c + dc) = img(r, c).
template <class T>
Image<T> cyclic_shift(const Image<T>& img, long dr, long dc) {
  Image<T> out(img.rows(), img.cols());
  const long R = static_cast<long>(img.rows()), C = static_cast<long>(img.cols());
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c)
      out(static_cast<std::size_t>(((r + dr) % R + R) % R), static_cast<std::size_t>(((c + dc) % C + C) % C)) =
          img(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  return out;
}

/// Copies `small` into the center of a `rows` x `cols` frame. The offset is
/// (rows - small.rows()) / 2 so that cell n/2 of an even grid stays central.
template <class T>
Image<T> embed_centered(const Image<T>& small, std::size_t rows, std::size_t cols) {
  if (small.rows() > rows || small.cols() > cols)
    throw std::invalid_argument("embed_centered: source larger than frame");
  Image<T> out(rows, cols);
  const std::size_t r0 = (rows - small.rows()) / 2, c0 = (cols - small.cols()) / 2;
  for (std::size_t r = 0; r < small.rows(); ++r)
    for (std::size_t c = 0; c < small.cols(); ++c) out(r0 + r, c0 + c) = small(r, c);
  return out;
}

enum class Axis { XY, YZ, ZX };

inline const char* to_string(Axis a) {
  switch (a) {
    case Axis::XY: return "XY";
    case Axis::YZ: return "YZ";
    case Axis::ZX: return "ZX";
  }
  return "?";
}

inline Axis axis_from_string(const std::string& s) {
  if (s == "XY" || s == "xy") return Axis::XY;
  if (s == "YZ" || s == "yz") return Axis::YZ;
  if (s == "ZX" || s == "zx") return Axis::ZX;
  throw std::invalid_argument("unknown axis '" + s + "' (expected XY, YZ or ZX)");
}

/// Cubic occupancy grid indexed (x, y, z).
class VoxelGrid {
public:
  VoxelGrid() = default;
  explicit VoxelGrid(std::size_t n, std::uint8_t fill = 0) : n_(n), data_(n * n * n, fill) {}

  std::size_t n() const noexcept { return n_; }
  std::uint8_t& operator()(std::size_t x, std::size_t y, std::size_t z) { return data_[(x * n_ + y) * n_ + z]; }
  std::uint8_t operator()(std::size_t x, std::size_t y, std::size_t z) const {
    return data_[(x * n_ + y) * n_ + z];
  }
  const std::vector<std::uint8_t>& values() const noexcept { return data_; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](auto v) { return v != 0; }));
  }

  /// True when every occupied voxel of *this is occupied in `other`.
  bool subset_of(const VoxelGrid& other) const {
    if (other.n_ != n_) return false;
    for (std::size_t i = 0; i < data_.size(); ++i)
      if (data_[i] && !other.data_[i]) return false;
    return true;
  }

  friend bool operator==(const VoxelGrid& a, const VoxelGrid& b) { return a.n_ == b.n_ && a.data_ == b.data_; }

private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Logical-OR projection along the axis not named by `axis`. XY -> (x, y),
/// YZ -> (y, z), ZX -> (z, x).
inline Mask project(const VoxelGrid& v, Axis axis) {
  const std::size_t n = v.n();
  Mask m(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z) {
        if (!v(x, y, z)) continue;
        switch (axis) {
          case Axis::XY: m(x, y) = 1; break;
          case Axis::YZ: m(y, z) = 1; break;
          case Axis::ZX: m(z, x) = 1; break;
        }
      }
  return m;
}

}  // namespace ipi
