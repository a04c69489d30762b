#pragma once

// Programmable pseudo-particles: six planar families built as unions of
// rectangles, random size and 3D orientation, rasterized as filled
// orthographic projections or as thin volumetric slabs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipi/errors.hpp"
#include "ipi/grid.hpp"
#include "ipi/rng.hpp"

namespace ipi {

enum class Family { Stick, Cross, Dendrite, L, T, Y };

inline constexpr std::array<Family, 6> kAllFamilies = {Family::Stick, Family::Cross, Family::Dendrite,
                                                       Family::L,     Family::T,     Family::Y};

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Stick: return "stick";
    case Family::Cross: return "cross";
    case Family::Dendrite: return "dendrite";
    case Family::L: return "l";
    case Family::T: return "t";
    case Family::Y: return "y";
  }
  return "?";
}

inline Family family_from_string(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Family f : kAllFamilies)
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unknown particle family '" + s + "'");
}

/// Stick, Cross and Dendrite are invariant under point reflection.
constexpr bool is_centrosymmetric(Family f) noexcept {
  return f == Family::Stick || f == Family::Cross || f == Family::Dendrite;
}

struct ShapeParams {
  double width_frac = 0.2;   ///< bar width / size
  double arm_ratio = 1.0;    ///< secondary arm length / primary (L, T, Y)
  double branch_frac = 1.0;  ///< dendrite branchlet length / arm length
};

/// One particle. `feret_um` is the Feret diameter of the particle skeleton
/// (bar centerlines): for a stick it is the stick length.
struct ShapeSpec {
  Family family = Family::Stick;
  double feret_um = 1000.0;
  ShapeParams params;
  Seed seed = 0;
};

struct SizeRange {
  double min_um = 370.0;
  double max_um = 1500.0;
};

inline constexpr SizeRange kDefaultSizeRange{370.0, 1500.0};

// Parameter ranges drawn by sample_shape.
inline constexpr double kStickWidthMin = 0.10, kStickWidthMax = 0.25;
inline constexpr double kBarWidthMin = 0.08, kBarWidthMax = 0.20;
inline constexpr double kDendriteWidthMin = 0.06, kDendriteWidthMax = 0.12;
inline constexpr double kArmRatioMin = 0.6, kArmRatioMax = 1.0;
inline constexpr double kBranchMin = 0.2, kBranchMax = 0.4;
inline constexpr double kMaxWidthFrac = kStickWidthMax;

inline void validate(const ShapeSpec& s) {
  if (!(s.feret_um > 0.0) || !std::isfinite(s.feret_um))
    throw std::invalid_argument("ShapeSpec: feret_um must be positive and finite");
  const auto& p = s.params;
  for (double v : {p.width_frac, p.arm_ratio, p.branch_frac})
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("ShapeSpec: params must lie in (0, 1]");
  if (p.width_frac > 0.5) throw std::invalid_argument("ShapeSpec: width fraction must be <= 0.5");
}

inline ShapeSpec sample_shape(Family family, SizeRange range, Seed seed) {
  if (!std::isfinite(range.min_um) || !std::isfinite(range.max_um) || range.min_um > range.max_um)
    throw std::invalid_argument("sample_shape: size range is empty or inverted");
  if (range.min_um < 1.0 || range.max_um > 1e5)
    throw std::invalid_argument("sample_shape: size range must lie within [1, 1e5] um");
  Rng rng(seed);
  ShapeSpec s;
  s.family = family;
  s.seed = seed;
  s.feret_um = range.min_um == range.max_um ? range.min_um : uniform(rng, range.min_um, range.max_um);
  switch (family) {
    case Family::Stick: s.params.width_frac = uniform(rng, kStickWidthMin, kStickWidthMax); break;
    case Family::Cross: s.params.width_frac = uniform(rng, kBarWidthMin, kBarWidthMax); break;
    case Family::Dendrite:
      s.params.width_frac = uniform(rng, kDendriteWidthMin, kDendriteWidthMax);
      s.params.branch_frac = uniform(rng, kBranchMin, kBranchMax);
      break;
    case Family::L:
    case Family::T:
    case Family::Y:
      s.params.width_frac = uniform(rng, kBarWidthMin, kBarWidthMax);
      s.params.arm_ratio = uniform(rng, kArmRatioMin, kArmRatioMax);
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Orientation

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

struct Quaternion {
  double w = 1, x = 0, y = 0, z = 0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  /// Hamilton product; (a * b) rotates by b first, then a.
  friend Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  }

  Quaternion conjugate() const { return {w, -x, -y, -z}; }

  static Quaternion axis_angle(Vec3 axis, double angle) {
    const double len = std::sqrt(axis.x * axis.x + axis.y * axis.y + axis.z * axis.z);
    const double s = std::sin(angle / 2) / len;
    return {std::cos(angle / 2), axis.x * s, axis.y * s, axis.z * s};
  }
};

/// Row-major rotation matrix of a unit quaternion.
using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 rotation_matrix(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

inline Vec3 apply(const Mat3& m, Vec3 v) {
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

inline Vec3 apply_transpose(const Mat3& m, Vec3 v) {
  return {m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z, m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
          m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z};
}

/// Rotation of the particle frame into the lab frame. The lab z axis is the
/// viewing direction for rasterize_projection.
struct Pose {
  Quaternion q;

  static Pose identity() { return {}; }
  /// Rotation about the lab z axis (in the image plane).
  static Pose in_plane(double angle) { return {Quaternion::axis_angle({0, 0, 1}, angle)}; }
  /// Composite rotation: `first`, then *this.
  Pose after(const Pose& first) const { return {q * first.q}; }
};

/// Uniform rotation by Shoemake's subgroup algorithm.
inline Pose sample_pose(Seed seed) {
  Rng rng(seed);
  const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double t2 = 2 * std::numbers::pi * u2, t3 = 2 * std::numbers::pi * u3;
  Quaternion q{b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3)};
  const double n = q.norm();
  return {{q.w / n, q.x / n, q.y / n, q.z / n}};
}

/// Projected-area ratio of a planar particle under `pose` relative to the
/// face-on view: |cos| of the angle between the rotated normal and the
/// viewing axis.
inline double projected_area_ratio(const Pose& pose) { return std::abs(rotation_matrix(pose.q)[2][2]); }

struct SampledPose {
  Pose pose;
  Seed seed_used = 0;
};

/// Draws uniform poses starting at `seed`, incrementing the seed until the
/// projected area is at least `min_area_ratio` of the face-on area.
inline SampledPose sample_visible_pose(Seed seed, double min_area_ratio = 0.01) {
  for (Seed s = seed;; ++s) {
    Pose p = sample_pose(s);
    if (projected_area_ratio(p) >= min_area_ratio) return {p, s};
  }
}

// ---------------------------------------------------------------------------
// Planar geometry

struct Vec2 {
  double x = 0, y = 0;
};

/// Convex quadrilateral with counter-clockwise corners.
struct Quad {
  std::array<Vec2, 4> p;

  bool contains(Vec2 q) const {
    for (int i = 0; i < 4; ++i) {
      const Vec2 a = p[i], b = p[(i + 1) % 4];
      if ((b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x) < 0) return false;
    }
    return true;
  }

  double signed_area() const {
    double s = 0;
    for (int i = 0; i < 4; ++i) s += p[i].x * p[(i + 1) % 4].y - p[(i + 1) % 4].x * p[i].y;
    return s / 2;
  }

  Quad ccw() const {
    if (signed_area() >= 0) return *this;
    return {{p[3], p[2], p[1], p[0]}};
  }
};

struct Segment {
  Vec2 a, b;
  double start_ext = 0;  ///< extension behind `a`, in bar widths
};

namespace detail {

inline Vec2 polar(double r, double deg) {
  const double t = deg * std::numbers::pi / 180.0;
  return {r * std::cos(t), r * std::sin(t)};
}

inline Vec2 add(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }

// Bar centerlines in unit-free coordinates, before scaling to the size.
inline std::vector<Segment> skeleton(const ShapeSpec& s) {
  const double a = s.params.arm_ratio;
  std::vector<Segment> segs;
  switch (s.family) {
    case Family::Stick: segs.push_back({{-0.5, 0}, {0.5, 0}}); break;
    case Family::Cross:
      segs.push_back({{-0.5, 0}, {0.5, 0}});
      segs.push_back({{0, -0.5}, {0, 0.5}});
      break;
    case Family::Dendrite:
      for (int k = 0; k < 6; ++k) {
        const double dir = 60.0 * k;
        segs.push_back({{0, 0}, polar(0.5, dir), 0.5});
        const Vec2 root = polar(0.25, dir);
        for (double side : {60.0, -60.0})
          segs.push_back({root, add(root, polar(0.5 * s.params.branch_frac, dir + side)), 0.5});
      }
      break;
    case Family::L:
      segs.push_back({{0, 0}, {1, 0}, 0.5});
      segs.push_back({{0, 0}, {0, a}, 0.5});
      break;
    case Family::T:
      segs.push_back({{-0.5, 0}, {0.5, 0}});
      segs.push_back({{0, 0}, {0, -a}});
      break;
    case Family::Y:
      segs.push_back({{0, 0}, polar(0.5 * a, 90), 0.5});
      segs.push_back({{0, 0}, polar(0.5, 210), 0.5});
      segs.push_back({{0, 0}, polar(0.5, 330), 0.5});
      break;
  }
  return segs;
}

inline double skeleton_diameter(const std::vector<Segment>& segs) {
  std::vector<Vec2> pts;
  for (const auto& s : segs) {
    pts.push_back(s.a);
    pts.push_back(s.b);
  }
  double d2 = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
      d2 = std::max(d2, dx * dx + dy * dy);
    }
  return std::sqrt(d2);
}

}  // namespace detail

/// The particle outline as rectangles in its own plane, micrometers,
/// centered on the bounding-box center of the outline.
inline std::vector<Quad> planar_outline(const ShapeSpec& shape) {
  validate(shape);
  auto segs = detail::skeleton(shape);
  const double scale = shape.feret_um / detail::skeleton_diameter(segs);
  const double w = shape.params.width_frac * shape.feret_um;
  std::vector<Quad> quads;
  for (const auto& s : segs) {
    const Vec2 a{s.a.x * scale, s.a.y * scale}, b{s.b.x * scale, s.b.y * scale};
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const Vec2 d{(b.x - a.x) / len, (b.y - a.y) / len}, nrm{-d.y, d.x};
    const Vec2 a0{a.x - d.x * s.start_ext * w, a.y - d.y * s.start_ext * w};
    const double h = w / 2;
    quads.push_back(Quad{{Vec2{a0.x - nrm.x * h, a0.y - nrm.y * h}, Vec2{b.x - nrm.x * h, b.y - nrm.y * h},
                          Vec2{b.x + nrm.x * h, b.y + nrm.y * h}, Vec2{a0.x + nrm.x * h, a0.y + nrm.y * h}}}
                        .ccw());
  }
  double x0 = std::numeric_limits<double>::max(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& q : quads)
    for (const auto& p : q.p) {
      x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
    }
  const double cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  for (auto& q : quads)
    for (auto& p : q.p) p.x -= cx, p.y -= cy;
  return quads;
}

/// Slab thickness of the volumetric model.
inline double slab_thickness_um(const ShapeSpec& shape) { return shape.params.width_frac * shape.feret_um; }

// ---------------------------------------------------------------------------
// Grids and rasterization

/// Square object grid. Cell i has its center at (i + 0.5 - n/2) * cell_um.
struct GridSpec {
  std::size_t n = 128;
  double cell_um = 12.5;

  double center(long i) const { return (static_cast<double>(i) + 0.5 - static_cast<double>(n) / 2) * cell_um; }
  /// Continuous cell coordinate of a position, so that center(i) maps to i.
  double to_cell(double um) const { return um / cell_um + static_cast<double>(n) / 2 - 0.5; }
};

inline void validate(const GridSpec& g) {
  if (!is_power_of_two(g.n)) throw std::invalid_argument("GridSpec: n must be a power of two");
  if (!(g.cell_um > 0.0) || !std::isfinite(g.cell_um)) throw std::invalid_argument("GridSpec: cell_um must be > 0");
}

/// Largest outline extent of any sampled particle relative to its size:
/// bar half-widths and joint extensions add at most sqrt(2) widths.
inline constexpr double kMaxOutlineFactor = 1.0 + std::numbers::sqrt2 * kMaxWidthFrac;

/// Object grid of side n with the cell size chosen so the largest particle
/// in `range` spans at most `max_span` cells (max_span < n - 2).
inline GridSpec default_object_grid(SizeRange range, std::size_t n = 128, double max_span = 120.0) {
  GridSpec g{n, range.max_um * kMaxOutlineFactor / max_span};
  validate(g);
  return g;
}

namespace detail {

struct Extent {
  long lo = std::numeric_limits<long>::max();
  long hi = std::numeric_limits<long>::min();
  void include(long v) { lo = std::min(lo, v), hi = std::max(hi, v); }
  bool empty() const { return hi < lo; }
};

// Cells with any part of [a, b] (continuous cell coordinates) may have their
// center inside; widen by one for rounding.
inline std::pair<long, long> cell_range(double a, double b) {
  return {static_cast<long>(std::floor(a)) - 1, static_cast<long>(std::ceil(b)) + 1};
}

inline int overflow_cells(const Extent& e, long n) {
  if (e.empty()) return 0;
  return static_cast<int>(std::max<long>({0, 1 - e.lo, e.hi - (n - 2)}));
}

inline Quad project_quad(const Quad& q, const Mat3& r) {
  Quad out;
  for (int i = 0; i < 4; ++i) {
    const Vec3 v = apply(r, {q.p[i].x, q.p[i].y, 0.0});
    out.p[i] = {v.x, v.y};
  }
  return out;
}

}  // namespace detail

/// Filled orthographic projection of the rotated planar particle along the
/// lab z axis. Mask(i, j) is set when the center of cell (x=i, y=j) lies in
/// the projection. Throws OutOfBoundsError when a filled cell would land in
/// the one-cell border or outside the grid.
inline Mask rasterize_projection(const ShapeSpec& shape, const Pose& pose, const GridSpec& grid) {
  validate(grid);
  const Mat3 r = rotation_matrix(pose.q);
  const long n = static_cast<long>(grid.n);
  Mask m(grid.n);
  detail::Extent ex, ey;
  for (const Quad& local : planar_outline(shape)) {
    const Quad q = detail::project_quad(local, r);
    if (std::abs(q.signed_area()) == 0.0) continue;
    const Quad pq = q.ccw();
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& p : pq.p) {
      x0 = std::min(x0, grid.to_cell(p.x)), x1 = std::max(x1, grid.to_cell(p.x));
      y0 = std::min(y0, grid.to_cell(p.y)), y1 = std::max(y1, grid.to_cell(p.y));
    }
    const auto [i0, i1] = detail::cell_range(x0, x1);
    const auto [j0, j1] = detail::cell_range(y0, y1);
    for (long i = i0; i <= i1; ++i)
      for (long j = j0; j <= j1; ++j) {
        if (!pq.contains({grid.center(i), grid.center(j)})) continue;
        ex.include(i), ey.include(j);
        if (i >= 0 && i < n && j >= 0 && j < n) m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = 1;
      }
  }
  const int over = std::max(detail::overflow_cells(ex, n), detail::overflow_cells(ey, n));
  if (over > 0) {
    std::ostringstream os;
    os << "rasterize_projection: " << to_string(shape.family) << " of " << shape.feret_um << " um exceeds the "
       << grid.n << "-cell grid (cell " << grid.cell_um << " um) by " << over << " cell(s)";
    throw OutOfBoundsError(os.str(), over);
  }
  return m;
}

/// Volumetric particle: every outline rectangle extruded into a slab of
/// thickness width_frac * size (never thinner than one cell), centered on
/// the particle plane, then rotated by `pose`. Voxel (x, y, z) is occupied
/// when its center lies inside a rotated slab.
inline VoxelGrid build_volume(const ShapeSpec& shape, const GridSpec& grid, const Pose& pose = Pose::identity()) {
  validate(grid);
  const Mat3 r = rotation_matrix(pose.q);
  const long n = static_cast<long>(grid.n);
  const double half_t = std::max(slab_thickness_um(shape), grid.cell_um) / 2;
  VoxelGrid v(grid.n);
  detail::Extent ext[3];
  for (const Quad& q : planar_outline(shape)) {
    double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
    for (const auto& p : q.p)
      for (double z : {-half_t, half_t}) {
        const Vec3 c = apply(r, {p.x, p.y, z});
        const double cc[3] = {grid.to_cell(c.x), grid.to_cell(c.y), grid.to_cell(c.z)};
        for (int k = 0; k < 3; ++k) lo[k] = std::min(lo[k], cc[k]), hi[k] = std::max(hi[k], cc[k]);
      }
    const auto [x0, x1] = detail::cell_range(lo[0], hi[0]);
    const auto [y0, y1] = detail::cell_range(lo[1], hi[1]);
    const auto [z0, z1] = detail::cell_range(lo[2], hi[2]);
    for (long x = x0; x <= x1; ++x)
      for (long y = y0; y <= y1; ++y)
        for (long z = z0; z <= z1; ++z) {
          const Vec3 local = apply_transpose(r, {grid.center(x), grid.center(y), grid.center(z)});
          if (std::abs(local.z) > half_t || !q.contains({local.x, local.y})) continue;
          ext[0].include(x), ext[1].include(y), ext[2].include(z);
          if (x >= 0 && x < n && y >= 0 && y < n && z >= 0 && z < n)
            v(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z)) = 1;
        }
  }
  int over = 0;
  for (const auto& e : ext) over = std::max(over, detail::overflow_cells(e, n));
  if (over > 0) {
    std::ostringstream os;
    os << "build_volume: " << to_string(shape.family) << " of " << shape.feret_um << " um exceeds the " << grid.n
       << "^3 grid by " << over << " cell(s)";
    throw OutOfBoundsError(os.str(), over);
  }
  return v;
}

inline Mask silhouette(const VoxelGrid& volume, Axis axis) { return project(volume, axis); }

}  // namespace ipi
