#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "scal/datasets.hpp"
#include "scal/errors.hpp"

using namespace scal;

namespace {

DatasetSpec spec_of(int k, int dim, int n0, double rho, std::uint64_t seed = 1) {
  DatasetSpec s;
  s.num_classes = k;
  s.dim = dim;
  s.n_per_class = n0;
  s.imbalance_ratio = rho;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(ClassSizes, BalancedTwoClasses) {
  EXPECT_EQ(class_sizes(spec_of(2, 2, 100, 1.0)), (std::vector<std::size_t>{100, 100}));
}

TEST(ClassSizes, ThreeClassGeometricDecay) {
  // 90 * 9^(-k/2) = 90, 30, 10
  EXPECT_EQ(class_sizes(spec_of(3, 3, 90, 9.0)), (std::vector<std::size_t>{90, 30, 10}));
}

TEST(ClassSizes, LongTailedTenClasses) {
  // Half-up rounding of 5000 * 50^(-k/9) sums to 13999; the exact sum
  // rounds to 14000, so class 0 takes the extra sample.
  const auto sizes = class_sizes(spec_of(10, 10, 5000, 50.0));
  EXPECT_EQ(sizes, (std::vector<std::size_t>{5001, 3237, 2096, 1357, 879, 569, 368, 239, 154, 100}));
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  EXPECT_EQ(total, 14000u);
  EXPECT_NEAR(static_cast<double>(sizes.front()) / static_cast<double>(sizes.back()), 50.0, 0.5);
}

TEST(ClassSizes, TotalMatchesRoundedExactSum) {
  for (double rho : {1.0, 2.5, 10.0, 50.0, 100.0}) {
    for (int k : {2, 5, 10}) {
      const auto spec = spec_of(k, k, 333, rho);
      double exact = 0.0;
      for (int i = 0; i < k; ++i) exact += 333 * std::pow(rho, -static_cast<double>(i) / (k - 1));
      std::size_t total = 0;
      for (auto s : class_sizes(spec)) total += s;
      EXPECT_EQ(total, static_cast<std::size_t>(std::floor(exact + 0.5))) << "rho " << rho << " K " << k;
    }
  }
}

TEST(GenerateMixture, HistogramMatchesSizes) {
  const auto spec = spec_of(4, 6, 60, 5.0);
  const auto data = generate_mixture(spec);
  EXPECT_EQ(class_histogram(data), class_sizes(spec));
  EXPECT_EQ(data.cols(), 6);
  EXPECT_NO_THROW(data.validate());
  EXPECT_EQ(data.num_classes, 4);
}

TEST(GenerateMixture, BalancedHistogramIsUniform) {
  const auto data = generate_mixture(spec_of(5, 8, 37, 1.0));
  for (auto c : class_histogram(data)) EXPECT_EQ(c, 37u);
}

TEST(GenerateMixture, SeedDeterministic) {
  const auto a = generate_mixture(spec_of(3, 4, 50, 2.0, 9));
  const auto b = generate_mixture(spec_of(3, 4, 50, 2.0, 9));
  const auto c = generate_mixture(spec_of(3, 4, 50, 2.0, 10));
  EXPECT_TRUE(a.values == b.values);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.ids, b.ids);
  EXPECT_FALSE(a.values == c.values);
}

TEST(GenerateMixture, ClassMeansNearCenters) {
  auto spec = spec_of(3, 5, 4000, 1.0);
  spec.class_separation = 4.0;
  const auto data = generate_mixture(spec);
  Matrix sums = Matrix::Zero(3, 5);
  for (Index i = 0; i < data.rows(); ++i) sums.row((*data.labels)[static_cast<std::size_t>(i)]) += data.values.row(i);
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(sums(k, j) / 4000.0, j == k ? 4.0 : 0.0, 0.08);
  }
}

TEST(GenerateMixture, InvalidSpecsRejected) {
  EXPECT_THROW(generate_mixture(spec_of(3, 3, 10, 0.5)), ConfigError);
  EXPECT_THROW(generate_mixture(spec_of(1, 3, 10, 1.0)), ConfigError);
  EXPECT_THROW(generate_mixture(spec_of(2, 1, 10, 1.0)), ConfigError);
  EXPECT_THROW(generate_mixture(spec_of(4, 3, 10, 1.0)), ConfigError);
}

TEST(GenerateOod, UnlabeledAwayFromClasses) {
  auto spec = spec_of(3, 5, 10, 1.0);
  const auto ood = generate_ood(spec, 500, 4);
  EXPECT_FALSE(ood.labeled());
  EXPECT_EQ(ood.rows(), 500);
  EXPECT_NEAR(ood.values.col(3).mean(), spec.class_separation, 0.2);
}

TEST(ApplyShift, ZeroMagnitudeGaussianIsIdentity) {
  const auto data = generate_mixture(spec_of(2, 3, 20, 1.0));
  const auto out = apply_shift(data, ShiftSpec{ShiftKind::additive_gaussian, 2, 0.0}, 5);
  EXPECT_TRUE(out.values == data.values);
}

TEST(ApplyShift, ScaleMultipliesNorms) {
  const auto data = generate_mixture(spec_of(2, 3, 20, 1.0));
  const auto out = apply_shift(data, ShiftSpec{ShiftKind::feature_scale, 1, 2.5}, 5);
  for (Index i = 0; i < data.rows(); ++i) EXPECT_NEAR(out.values.row(i).norm(), 2.5 * data.values.row(i).norm(), 1e-12);
}

TEST(ApplyShift, GaussianLevelThreeStd) {
  const auto data = generate_mixture(spec_of(2, 10, 1000, 1.0));
  const ShiftSpec shift{ShiftKind::additive_gaussian, 3, std::nullopt};
  const auto out = apply_shift(data, shift, 11);
  const Matrix diff = out.values - data.values;
  ASSERT_GE(diff.size(), 10000);
  const double mean = diff.mean();
  const double var = (diff.array() - mean).square().sum() / static_cast<double>(diff.size() - 1);
  EXPECT_NEAR(std::sqrt(var), shift.magnitude(), 0.05 * shift.magnitude());
}

TEST(ApplyShift, PreservesLabelsIdsAndShape) {
  const auto data = generate_mixture(spec_of(3, 4, 30, 3.0));
  for (ShiftKind kind : kAllShiftKinds) {
    for (int level = 1; level <= 5; ++level) {
      const auto out = apply_shift(data, ShiftSpec{kind, level, std::nullopt}, 3);
      EXPECT_EQ(out.labels, data.labels);
      EXPECT_EQ(out.ids, data.ids);
      EXPECT_EQ(out.rows(), data.rows());
      EXPECT_EQ(out.cols(), data.cols());
      EXPECT_TRUE(out.values == apply_shift(data, ShiftSpec{kind, level, std::nullopt}, 3).values);
    }
  }
}

TEST(ApplyShift, ScheduleStrictlyIncreasing) {
  for (ShiftKind kind : kAllShiftKinds) {
    const auto& s = shift_schedule(kind);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s[i - 1], s[i]);
  }
}

TEST(ApplyShift, IntensityOutOfRangeRejected) {
  const auto data = generate_mixture(spec_of(2, 2, 5, 1.0));
  EXPECT_THROW(apply_shift(data, ShiftSpec{ShiftKind::mean_drift, 0, std::nullopt}, 1), ConfigError);
  EXPECT_THROW(apply_shift(data, ShiftSpec{ShiftKind::mean_drift, 6, std::nullopt}, 1), ConfigError);
  EXPECT_THROW(parse_shift_kind("blur"), ConfigError);
}

TEST(ApplyShift, DropoutZeroesAboutTheScheduledFraction) {
  const auto data = generate_mixture(spec_of(2, 10, 2000, 1.0));
  const auto out = apply_shift(data, ShiftSpec{ShiftKind::feature_dropout_mask, 4, std::nullopt}, 2);
  const double zeros = static_cast<double>((out.values.array() == 0.0).count()) / static_cast<double>(out.values.size());
  EXPECT_NEAR(zeros, 0.3, 0.02);
}

TEST(ApplyShift, MeanDriftTranslatesByMagnitude) {
  const auto data = generate_mixture(spec_of(2, 6, 10, 1.0));
  const auto out = apply_shift(data, ShiftSpec{ShiftKind::mean_drift, 5, std::nullopt}, 2);
  const Matrix diff = out.values - data.values;
  for (Index i = 0; i < diff.rows(); ++i) {
    EXPECT_NEAR(diff.row(i).norm(), 3.0, 1e-12);
    EXPECT_LT((diff.row(i) - diff.row(0)).norm(), 1e-12);
  }
}
