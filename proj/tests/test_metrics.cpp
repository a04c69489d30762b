#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ipi/metrics.hpp"
#include "oracles.hpp"

using namespace ipi;

namespace {

// Every orientation and cyclic shift, same tie order as the contract.
AlignedIou exhaustive(const Mask& recon, const Mask& truth) {
  AlignedIou best{-1.0, {}};
  const long n = static_cast<long>(truth.rows());
  for (bool refl : {false, true})
    for (long r = 0; r < n; ++r)
      for (long c = 0; c < n; ++c) {
        const AlignTransform t{refl, r, c};
        const double v = iou(recon, apply(t, truth));
        if (v > best.iou + 1e-15) best = {v, t};
      }
  return best;
}

Mask asymmetric(std::size_t n) {
  Mask m = oracle::rectangle(n, 4, 4, 3, 9);
  m(7, 4) = m(8, 4) = m(9, 4) = 1;
  return m;
}

}  // namespace

TEST(Mse, Examples) {
  EXPECT_EQ(mse(RealImage(4, 4, 0.3), RealImage(4, 4, 0.3)), 0.0);
  EXPECT_EQ(mse(RealImage(4, 4, 0.0), RealImage(4, 4, 1.0)), 1.0);
  RealImage half(4);
  for (std::size_t c = 0; c < 4; ++c) half(0, c) = half(1, c) = 1;
  EXPECT_EQ(mse(half, RealImage(4)), 0.5);
  EXPECT_EQ(mse(half, RealImage(4, 4, 1.0)), mse(RealImage(4, 4, 1.0), half));
  EXPECT_THROW(mse(RealImage(4), RealImage(5)), std::invalid_argument);
}

TEST(Iou, Examples) {
  std::mt19937_64 rng(1);
  const Mask a = oracle::random_blob_mask(16, rng);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(oracle::rectangle(8, 0, 0, 2, 2), oracle::rectangle(8, 4, 4, 2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(iou(oracle::rectangle(8, 1, 1, 2, 1), oracle::rectangle(8, 2, 1, 2, 1)), 1.0 / 3);
  EXPECT_THROW(iou(Mask(8), Mask(8)), UndefinedMetricError);
  const Mask b = oracle::random_blob_mask(16, rng);
  EXPECT_EQ(iou(a, b), iou(b, a));
}

TEST(AlignedIou, RecoversShift) {
  const Mask t = asymmetric(32);
  const AlignedIou a = best_aligned_iou(cyclic_shift(t, 5, 7), t);
  EXPECT_EQ(a.iou, 1.0);
  EXPECT_EQ(a.transform, (AlignTransform{false, 5, 7}));
}

TEST(AlignedIou, RecoversReflection) {
  const Mask t = asymmetric(32);
  const AlignedIou a = best_aligned_iou(point_reflect(t), t);
  EXPECT_EQ(a.iou, 1.0);
  EXPECT_TRUE(a.transform.reflected);
  EXPECT_EQ(a.transform, (AlignTransform{true, 0, 0}));
}

TEST(AlignedIou, TiesPreferIdentityThenSmallestShift) {
  Mask m(8);
  m(3, 3) = 1;  // a point equals its own reflection up to a shift
  const AlignedIou a = best_aligned_iou(m, m);
  EXPECT_EQ(a.transform, (AlignTransform{false, 0, 0}));
  const AlignedIou f = best_aligned_iou(Mask(8, 8, 1), m);
  EXPECT_EQ(f.transform, (AlignTransform{false, 0, 0}));
}

TEST(AlignedIou, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const Mask a = oracle::random_blob_mask(16, rng, 2), b = oracle::random_blob_mask(16, rng, 2);
    const AlignedIou fast = best_aligned_iou(a, b), slow = exhaustive(a, b);
    EXPECT_DOUBLE_EQ(fast.iou, slow.iou);
    EXPECT_EQ(fast.transform, slow.transform);
    EXPECT_GE(fast.iou, iou(a, b));
  }
}

TEST(AlignedIou, InvariantUnderRigidMotions) {
  std::mt19937_64 rng(3);
  const Mask a = oracle::random_blob_mask(32, rng), b = oracle::random_blob_mask(32, rng);
  const double v = best_aligned_iou(a, b).iou;
  EXPECT_DOUBLE_EQ(best_aligned_iou(point_reflect(a), b).iou, v);
  EXPECT_DOUBLE_EQ(best_aligned_iou(a, cyclic_shift(b, 3, 11)).iou, v);
  EXPECT_DOUBLE_EQ(best_aligned_iou(cyclic_shift(a, 30, 1), point_reflect(b)).iou, v);
  EXPECT_THROW(best_aligned_iou(Mask(8), Mask(8)), UndefinedMetricError);
}

TEST(Difference, RenderingEndpoints) {
  const Mask full(8, 8, 1), empty(8);
  for (auto v : render_difference(difference_image(full, full))) EXPECT_EQ(v, 128);
  for (auto v : render_difference(difference_image(full, empty))) EXPECT_EQ(v, 255);
  for (auto v : render_difference(difference_image(empty, full))) EXPECT_EQ(v, 0);
}

TEST(Difference, NormalizesToUnitMax) {
  RealImage recon(4, 4, 0.5);
  const RealImage d = difference_image(Mask(4, 4, 1), recon);
  for (double v : d) EXPECT_EQ(v, 0.0);
}

TEST(Report, CsvColumns) {
  std::ostringstream os;
  write_eval_csv(os, {{"000001", "stick", "ER", 0.5, 0.75, 0.1, "identity+0,0"}});
  EXPECT_EQ(os.str(), "id,family,method,iou,aligned_iou,mse,transform\n000001,stick,ER,0.5,0.75,0.1,identity+0,0\n");
}

TEST(Report, FamilySummary) {
  const auto s = summarize({1, 2, 3, 4});
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_NEAR(s.std, std::sqrt(5.0 / 3), 1e-12);
  std::ostringstream os;
  write_family_summary_csv(os, {{"1", "t", "ER", 0, 0.5, 0.1, ""}, {"2", "t", "ER", 0, 0.7, 0.3, ""},
                                {"1", "t", "CNN", 0, 0.9, 0.0, ""}});
  std::string header, row1, row2;
  std::istringstream is(os.str());
  std::getline(is, header), std::getline(is, row1), std::getline(is, row2);
  EXPECT_EQ(row1.substr(0, 8), "t,CNN,1,");
  EXPECT_EQ(row2.substr(0, 10), "t,ER,2,0.6");
}
