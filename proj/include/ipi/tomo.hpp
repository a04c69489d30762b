#pragma once

// Visual-hull recombination of three orthogonal silhouettes.

#include <array>
#include <cstdint>
#include <ostream>
#include <stdexcept>

#include "ipi/errors.hpp"
#include "ipi/grid.hpp"
#include "ipi/metrics.hpp"

namespace ipi {

/// Voxel (x, y, z) is occupied iff xy(x, y), yz(y, z) and zx(z, x) are all set.
inline VoxelGrid visual_hull(const Mask& m_xy, const Mask& m_yz, const Mask& m_zx) {
  const std::size_t n = m_xy.rows();
  for (const Mask* m : {&m_xy, &m_yz, &m_zx})
    if (m->rows() != n || m->cols() != n) throw std::invalid_argument("visual_hull: masks must be n x n of equal n");
  VoxelGrid v(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (!m_xy(x, y)) continue;
      for (std::size_t z = 0; z < n; ++z)
        if (m_yz(y, z) && m_zx(z, x)) v(x, y, z) = 1;
    }
  return v;
}

inline Mask reproject(const VoxelGrid& grid, Axis axis) { return project(grid, axis); }

/// Cyclic shift moving the bounding-box center of the mask to (n/2, n/2).
/// Silhouettes of one volume share their extents along common axes, so
/// bounding-box centering keeps them mutually consistent.
inline Mask center_mask(const Mask& m) {
  const BoundingBox b = bounding_box(m);
  if (b.empty()) return m;
  const long n = static_cast<long>(m.rows());
  const long dr = n / 2 - (b.r0 + b.r1 + 1) / 2;
  const long dc = n / 2 - (b.c0 + b.c1 + 1) / 2;
  return cyclic_shift(m, dr, dc);
}

/// Point reflection through the bounding-box center, mapping the box onto
/// itself.
inline Mask reflect_in_box(const Mask& m) {
  const BoundingBox b = bounding_box(m);
  Mask out(m.rows(), m.cols());
  if (b.empty()) return out;
  for (long r = b.r0; r <= b.r1; ++r)
    for (long c = b.c0; c <= b.c1; ++c)
      out(static_cast<std::size_t>(b.r0 + b.r1 - r), static_cast<std::size_t>(b.c0 + b.c1 - c)) =
          m(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  return out;
}

struct AlignedHull {
  VoxelGrid hull;
  std::array<bool, 3> reflected{};  ///< per view: XY, YZ, ZX
  int combination = 0;              ///< bit k set when view k is reflected
  double score = 0.0;               ///< sum of reprojection IoUs
};

namespace detail {

inline double iou_or_zero(const Mask& a, const Mask& b) {
  try {
    return iou(a, b);
  } catch (const UndefinedMetricError&) {
    return 0.0;
  }
}

}  // namespace detail

/// Recombines reconstructed views, which carry neither absolute position nor
/// orientation sign: each view is bounding-box centered, then the 8
/// per-view reflection combinations are tried and the one whose hull best
/// reproduces its inputs (sum of IoUs) wins; ties go to the lowest index.
inline AlignedHull aligned_visual_hull(const Mask& m_xy, const Mask& m_yz, const Mask& m_zx) {
  const std::array<Mask, 3> centered{center_mask(m_xy), center_mask(m_yz), center_mask(m_zx)};
  const std::array<Mask, 3> flipped{reflect_in_box(centered[0]), reflect_in_box(centered[1]),
                                    reflect_in_box(centered[2])};
  constexpr std::array<Axis, 3> axes{Axis::XY, Axis::YZ, Axis::ZX};
  AlignedHull best;
  best.score = -1.0;
  for (int combo = 0; combo < 8; ++combo) {
    std::array<const Mask*, 3> views{};
    for (int k = 0; k < 3; ++k) views[k] = (combo >> k) & 1 ? &flipped[k] : &centered[k];
    VoxelGrid hull = visual_hull(*views[0], *views[1], *views[2]);
    double score = 0.0;
    for (int k = 0; k < 3; ++k) score += detail::iou_or_zero(reproject(hull, axes[k]), *views[k]);
    if (score > best.score) {
      best.hull = std::move(hull);
      best.score = score;
      best.combination = combo;
      for (int k = 0; k < 3; ++k) best.reflected[k] = (combo >> k) & 1;
    }
  }
  return best;
}

/// One line per run of occupied voxels along x: "z y x_start x_end"
/// (inclusive), ordered by z, then y, then x.
inline void write_run_length(std::ostream& os, const VoxelGrid& v) {
  const std::size_t n = v.n();
  for (std::size_t z = 0; z < n; ++z)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n;) {
        if (!v(x, y, z)) {
          ++x;
          continue;
        }
        const std::size_t start = x;
        while (x < n && v(x, y, z)) ++x;
        os << z << ' ' << y << ' ' << start << ' ' << x - 1 << '\n';
      }
}

/// z-slice as a mask indexed (x, y).
inline Mask slice_z(const VoxelGrid& v, std::size_t z) {
  Mask m(v.n());
  for (std::size_t x = 0; x < v.n(); ++x)
    for (std::size_t y = 0; y < v.n(); ++y) m(x, y) = v(x, y, z);
  return m;
}

}  // namespace ipi
