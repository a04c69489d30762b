// Acceptance runner: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ipi/ipi.hpp"
#include "../oracles.hpp"

using namespace ipi;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Random particle projection on an object grid, the way the dataset draws it.
Mask random_particle(Family f, const GridSpec& g, Seed master, std::size_t i) {
  const ShapeSpec s = sample_shape(f, kDefaultSizeRange, derive_seed(master, i, 1));
  for (Seed ps = derive_seed(master, i, 2);; ++ps) {
    const SampledPose sp = sample_visible_pose(ps);
    const Mask m = rasterize_projection(s, sp.pose, g);
    if (count_nonzero(m) > 0) return m;
    ps = sp.seed_used;
  }
}

void fourier_identity() {
  const auto t0 = Clock::now();
  const GridSpec g = default_object_grid(kDefaultSizeRange);
  OpticsConfig o;  // 256 / 128
  double worst = 0, worst_center = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const Mask m = random_particle(kAllFamilies[i % 6], g, 101, i);
    const AsperitySet a = sample_asperities(m, kDefaultDensity, derive_seed(101, i, 3));
    const ACMap ac = autocorrelation_map(synthesize_speckle(a, o));
    const ComplexImage ref = oracle::circular_autocorrelation(emitter_field(a, o.image_n));
    double peak = 0, err = 0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      peak = std::max(peak, std::abs(ref.data()[k]));
      err = std::max(err, std::abs(ac.values.data()[k] - ref.data()[k]));
    }
    worst = std::max(worst, err / peak);
    worst_center = std::max(worst_center, std::abs(ac.center() - std::complex<double>(double(a.size()), 0)));
  }
  const double t = seconds_since(t0);
  report(worst < 1e-9 && worst_center < 1e-9 && t < 30, "fourier-identity",
         fmt("100 sets n=256, max rel err %.2e, center err %.2e, %.1f s", worst, worst_center, t));
}

void two_emitter_fringes() {
  OpticsConfig o;
  bool ok = true;
  std::string detail;
  for (int d : {4, 8, 16, 32}) {
    AsperitySet a;
    a.object_n = o.object_n;
    a.items = {{40, 50, 0.3, 1.0}, {40 + d, 50, 1.1, 1.0}};
    const RealImage I = synthesize_speckle(a, o);
    // maxima along the separation axis, column 0
    const long n = static_cast<long>(o.image_n);
    std::vector<long> peaks;
    for (long p = 0; p < n; ++p) {
      const double v = I(p, 0), lo = I((p + n - 1) % n, 0), hi = I((p + 1) % n, 0);
      if (v > lo && v >= hi) peaks.push_back(p);
    }
    const double period = peaks.size() > 1 ? double(peaks.back() - peaks.front()) / double(peaks.size() - 1) : 0;
    const double expect = double(n) / d, rel = std::abs(period - expect) / expect;
    ok = ok && rel < 0.02;
    detail += fmt("d=%d period %.3f (expect %.3f) ", d, period, expect);
  }
  report(ok, "two-emitter-fringes", detail);
}

struct FamilyScores {
  double speckle = 0, exact = 0;
  bool monotone = true;
  std::size_t clamped = 0;
};

FamilyScores er_family(Family f, int samples) {
  const GridSpec g = default_object_grid(kDefaultSizeRange, 64, 60);
  OpticsConfig o;
  o.image_n = 128;
  o.object_n = 64;
  ERConfig cfg;
  FamilyScores s;
  auto monotone = [](const ERResult& r) {
    for (const auto& tr : r.restart_traces)
      for (std::size_t k = 1; k < tr.size(); ++k)
        if (tr[k] > tr[k - 1] + 1e-12) return false;
    return true;
  };
  for (int i = 0; i < samples; ++i) {
    const Mask m = random_particle(f, g, 202 + static_cast<int>(f), i);
    const Mask truth = embed_centered(m, o.image_n, o.image_n);
    const AsperitySet a = sample_asperities(m, kDefaultDensity, derive_seed(202, i, 3));
    cfg.init_seed = derive_seed(202, i, 5);
    const Reconstruction rs = reconstruct_from_speckle(synthesize_speckle(a, o), cfg);
    const Reconstruction re = reconstruct_from_object(oracle::to_real(truth), cfg);
    s.speckle += best_aligned_iou(rs.mask, truth).iou / samples;
    s.exact += best_aligned_iou(re.mask, truth).iou / samples;
    s.monotone = s.monotone && monotone(rs.er) && monotone(re.er);
    s.clamped += rs.clamped;
  }
  return s;
}

void er_and_twin_gap() {
  const int N = 30;
  const std::array<Family, 3> centro{Family::Stick, Family::Cross, Family::Dendrite};
  const std::array<Family, 3> twin{Family::L, Family::T, Family::Y};
  const auto t0 = Clock::now();
  double cs = 0, ce = 0, ts = 0, te = 0;
  bool mono = true, per_family = true;
  std::string detail;
  for (Family f : centro) {
    const FamilyScores s = er_family(f, N);
    cs += s.speckle / 3, ce += s.exact / 3;
    mono = mono && s.monotone;
    per_family = per_family && s.speckle >= 0.85 && s.exact >= 0.95;
    detail += fmt("%s speckle %.3f exact %.3f; ", to_string(f), s.speckle, s.exact);
  }
  const double t = seconds_since(t0);
  report(per_family, "er-centrosymmetric-iou", detail + "targets 0.85 / 0.95");
  report(mono, "er-error-monotone", fmt("%d runs x 4 restarts x 2 routes, tolerance 1e-12", 3 * N));
  report(t < 600, "er-runtime", fmt("%.1f s for %d reconstructions at n=128", t, 3 * N * 2));

  detail.clear();
  for (Family f : twin) {
    const FamilyScores s = er_family(f, N);
    ts += s.speckle / 3, te += s.exact / 3;
    detail += fmt("%s speckle %.3f exact %.3f; ", to_string(f), s.speckle, s.exact);
  }
  report(te < ce, "twin-gap-exact", fmt("{S,C,D} %.3f vs {L,T,Y} %.3f, gap %.3f", ce, te, ce - te));
  report(ts < cs, "twin-gap-speckle", fmt("{S,C,D} %.3f vs {L,T,Y} %.3f, gap %.3f; ", cs, ts, cs - ts) + detail);
}

void ac_reflection_invariance() {
  const GridSpec g = default_object_grid(kDefaultSizeRange, 64, 60);
  double worst = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    const Mask m = embed_centered(random_particle(kAllFamilies[i % 6], g, 303, i), 128, 128);
    const RealImage a = exact_autocorrelation(oracle::to_real(m));
    const RealImage b = exact_autocorrelation(oracle::to_real(point_reflect(m)));
    double peak = 0, err = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      peak = std::max(peak, std::abs(a.data()[k]));
      err = std::max(err, std::abs(std::abs(a.data()[k]) - std::abs(b.data()[k])));
    }
    worst = std::max(worst, err / peak);
  }
  report(worst < 1e-9, "ac-reflection-invariance", fmt("60 masks, max rel |AC| difference %.2e", worst));
}

void visual_hull_checks() {
  const long n = 64;
  const double r = 20;
  Mask disc(n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const double x = i + 0.5 - n / 2.0, y = j + 0.5 - n / 2.0;
      disc(i, j) = x * x + y * y <= r * r;
    }
  const double count = static_cast<double>(visual_hull(disc, disc, disc).count());
  const double expect = 8 * (2 - std::numbers::sqrt2) * r * r * r;
  const double rel = std::abs(count - expect) / expect;
  report(rel < 0.02, "hull-steinmetz", fmt("%.0f voxels vs %.1f, rel err %.4f", count, expect, rel));

  std::mt19937_64 rng(404);
  bool contains = true, fixed = true;
  const std::size_t m = 32;
  for (int t = 0; t < 20; ++t) {
    VoxelGrid v(m);
    std::uniform_real_distribution<double> c(6, 26), rad(2, 7);
    for (int b = 0; b < 3; ++b) {
      const double cx = c(rng), cy = c(rng), cz = c(rng), rx = rad(rng), ry = rad(rng), rz = rad(rng);
      for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < m; ++y)
          for (std::size_t z = 0; z < m; ++z) {
            const double dx = (x - cx) / rx, dy = (y - cy) / ry, dz = (z - cz) / rz;
            if (dx * dx + dy * dy + dz * dz <= 1) v(x, y, z) = 1;
          }
    }
    const Mask xy = project(v, Axis::XY), yz = project(v, Axis::YZ), zx = project(v, Axis::ZX);
    const VoxelGrid h = visual_hull(xy, yz, zx);
    for (std::size_t k = 0; k < v.values().size(); ++k)
      if (v.values()[k] && !h.values()[k]) contains = false;
    fixed = fixed && reproject(h, Axis::XY) == xy && reproject(h, Axis::YZ) == yz && reproject(h, Axis::ZX) == zx;
  }
  report(contains && fixed, "hull-random-models",
         fmt("20 models: hull contains model %s, reprojections exact %s", contains ? "yes" : "no", fixed ? "yes" : "no"));
}

bool same_files(const fs::path& a, const fs::path& b) {
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  };
  return slurp(a) == slurp(b);
}

void dataset_pipeline() {
  {
    DatasetConfig c;
    c.count = 18000;
    std::vector<Family> fam(c.count);
    for (std::size_t i = 0; i < c.count; ++i) fam[i] = family_for_index(c, i);
    const auto sp = assign_splits(fam, c.split_ratio, c.master_seed);
    const auto train = std::count(sp.begin(), sp.end(), Split::Train);
    report(train == 16200 && sp.size() - train == 1800, "dataset-split",
           fmt("18000 -> %ld train / %ld test", long(train), long(sp.size() - train)));
  }

  const fs::path root = fs::temp_directory_path() / "ipi_acceptance";
  fs::remove_all(root);
  DatasetConfig c;
  c.count = 2000;
  c.master_seed = 505;
  const auto t0 = Clock::now();
  const DatasetManifest m8 = generate_dataset(c, root / "w8", 8);
  const double t = seconds_since(t0);
  report(t < 600 && m8.records.size() == 2000, "dataset-desk-run", fmt("2000 pairs, 8 workers, %.1f s", t));

  bool regen = true;
  const DatasetManifest back = load_manifest(root / "w8");
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    const SampleFiles f = regenerate_sample(back, i);
    const SamplePair p = read_pair(root / "w8", back, i);  // checksums
    (void)p;
    std::ifstream s(speckle_path(root / "w8", i), std::ios::binary), k(mask_path(root / "w8", i), std::ios::binary);
    const std::string sb{std::istreambuf_iterator<char>(s), {}}, kb{std::istreambuf_iterator<char>(k), {}};
    regen = regen && sb == std::string(f.speckle_png.begin(), f.speckle_png.end()) &&
            kb == std::string(f.mask_png.begin(), f.mask_png.end());
  }
  report(regen, "dataset-regeneration", "all 2000 pairs rebuilt from the manifest byte-for-byte");

  generate_dataset(c, root / "w1", 1);
  bool same = same_files(root / "w8" / "manifest.jsonl", root / "w1" / "manifest.jsonl") &&
              same_files(root / "w8" / "manifest.header.json", root / "w1" / "manifest.header.json");
  for (std::size_t i = 0; i < c.count && same; ++i)
    same = same_files(speckle_path(root / "w8", i), speckle_path(root / "w1", i)) &&
           same_files(mask_path(root / "w8", i), mask_path(root / "w1", i));
  report(same, "dataset-worker-independence", "8-worker and 1-worker trees identical");
  fs::remove_all(root);
}

void metrics_checks() {
  std::mt19937_64 rng(606);
  bool ok = true;
  for (int t = 0; t < 50; ++t) {
    const Mask a = oracle::random_blob_mask(32, rng), b = oracle::random_blob_mask(32, rng);
    AlignedIou slow{-1.0, {}};
    for (bool refl : {false, true})
      for (long r = 0; r < 32; ++r)
        for (long c = 0; c < 32; ++c) {
          const AlignTransform tr{refl, r, c};
          const double v = iou(a, apply(tr, b));
          if (v > slow.iou) slow = {v, tr};
        }
    const AlignedIou fast = best_aligned_iou(a, b);
    ok = ok && fast.iou == slow.iou && fast.transform == slow.transform;
  }
  report(ok, "metrics-aligned-iou-oracle", "50 random n=32 pairs, exact match incl. transform");

  const Mask m = oracle::random_blob_mask(64, rng);
  bool gray = true;
  for (auto v : render_difference(difference_image(m, m))) gray = gray && v == 128;
  report(gray, "metrics-difference-identical", "identical masks render uniformly 128");
}

}  // namespace

int main() {
  fourier_identity();
  two_emitter_fringes();
  ac_reflection_invariance();
  visual_hull_checks();
  metrics_checks();
  dataset_pipeline();
  er_and_twin_gap();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
