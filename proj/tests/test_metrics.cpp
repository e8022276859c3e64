#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "scal/errors.hpp"
#include "scal/metrics.hpp"
#include "scal/model.hpp"

using namespace scal;

namespace {

double auroc_of(const std::vector<double>& in, const std::vector<double>& out) { return auroc(in, out); }

}  // namespace

TEST(Accuracy, Basic) {
  Matrix p(3, 2);
  p << 0.9, 0.1, 0.4, 0.6, 0.5, 0.5;
  EXPECT_NEAR(accuracy(p, std::vector<int>{0, 1, 1}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(accuracy(p, std::vector<int>{0, 1}), ShapeError);
  EXPECT_THROW(accuracy(Matrix(0, 2), std::vector<int>{}), ContractError);
}

TEST(Ece, FixedPoints) {
  Matrix onehot(3, 3);
  onehot << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_NEAR(ece(onehot, std::vector<int>{0, 1, 2}), 0.0, 1e-15);

  Matrix p(2, 2);
  p << 0.8, 0.2, 0.2, 0.8;
  EXPECT_NEAR(ece(p, std::vector<int>{0, 1}), 0.2, 1e-12);

  Matrix uniform = Matrix::Constant(8, 4, 0.25);
  EXPECT_NEAR(ece(uniform, std::vector<int>{0, 1, 2, 3, 0, 1, 2, 3}), 0.0, 1e-12);
}

TEST(Ece, PermutationInvariantAndBounded) {
  std::mt19937_64 rng(1);
  std::gamma_distribution<double> g(0.5);
  Matrix p(60, 3);
  std::vector<int> y(60);
  for (Index i = 0; i < 60; ++i) {
    for (Index k = 0; k < 3; ++k) p(i, k) = g(rng) + 1e-9;
    p.row(i) /= p.row(i).sum();
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3);
  }
  const double base = ece(p, y);
  EXPECT_GE(base, 0.0);
  EXPECT_LE(base, 1.0);
  Matrix q = p.colwise().reverse();
  std::vector<int> z(y.rbegin(), y.rend());
  EXPECT_NEAR(ece(q, z), base, 1e-12);
}

TEST(Ece, NestedRefinementNeverDecreases) {
  // Splitting every bin in two can only raise the sum of |gap| terms.
  std::mt19937_64 rng(2);
  std::gamma_distribution<double> g(0.6);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix p(80, 4);
    std::vector<int> y(80);
    for (Index i = 0; i < 80; ++i) {
      for (Index k = 0; k < 4; ++k) p(i, k) = g(rng) + 1e-9;
      p.row(i) /= p.row(i).sum();
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 4);
    }
    for (int bins : {1, 2, 4, 8}) EXPECT_LE(ece(p, y, bins), ece(p, y, 2 * bins) + 1e-12);
  }
}

TEST(Brier, FixedPoints) {
  Matrix p(1, 2);
  p << 1, 0;
  EXPECT_NEAR(brier(p, std::vector<int>{0}), 0.0, 1e-15);
  EXPECT_NEAR(brier(p, std::vector<int>{1}), 2.0, 1e-15);
  p << 0.5, 0.5;
  EXPECT_NEAR(brier(p, std::vector<int>{1}), 0.5, 1e-15);
}

TEST(Brier, ProperScore) {
  // Expected Brier under labels ~ q is minimized by predicting q.
  const std::vector<double> q{0.6, 0.3, 0.1};
  auto expected = [&](const std::vector<double>& r) {
    double total = 0.0;
    for (int y = 0; y < 3; ++y) {
      Matrix p(1, 3);
      p << r[0], r[1], r[2];
      total += q[static_cast<std::size_t>(y)] * brier(p, std::vector<int>{y});
    }
    return total;
  };
  const double truth = expected(q);
  for (double a = 0.0; a <= 1.0; a += 0.05) {
    for (double b = 0.0; a + b <= 1.0 + 1e-12; b += 0.05) {
      const std::vector<double> r{a, b, std::max(0.0, 1.0 - a - b)};
      EXPECT_GE(expected(r), truth - 1e-12);
    }
  }
}

TEST(Nll, FixedPoints) {
  Matrix p(3, 2);
  p << 1, 0, 1.0 / std::exp(1.0), 1.0 - 1.0 / std::exp(1.0), 0, 1;
  EXPECT_NEAR(nll(p.topRows(1), std::vector<int>{0}), 0.0, 1e-15);
  EXPECT_NEAR(nll(p.middleRows(1, 1), std::vector<int>{0}), 1.0, 1e-12);
  EXPECT_NEAR(nll(p, std::vector<int>{0, 0, 1}), (0.0 + 1.0 + 0.0) / 3.0, 1e-12);
  EXPECT_NEAR(nll(p.bottomRows(1), std::vector<int>{0}), -std::log(1e-12), 1e-9);
}

TEST(Auroc, FixedPoints) {
  EXPECT_DOUBLE_EQ(auroc_of({0.1, 0.2}, {0.9, 0.8}), 1.0);
  EXPECT_DOUBLE_EQ(auroc_of({0.5, 0.1}, {0.8, 0.3}), 0.75);
  EXPECT_DOUBLE_EQ(auroc_of({0.3, 0.7, 0.7}, {0.7, 0.3, 0.7}), 0.5);
  EXPECT_THROW(auroc_of({}, {1.0}), ContractError);
  EXPECT_THROW(auroc_of({1.0}, {}), ContractError);
}

TEST(Auroc, MatchesPairwiseEnumerationWithTies) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_in = std::uniform_int_distribution<std::size_t>(1, 100)(rng);
    const std::size_t n_out = std::uniform_int_distribution<std::size_t>(1, 100)(rng);
    const int levels = std::uniform_int_distribution<int>(2, 12)(rng);
    std::uniform_int_distribution<int> level(0, levels);
    std::vector<double> in(n_in), out(n_out);
    for (auto& v : in) v = level(rng) * 0.1;
    for (auto& v : out) v = level(rng) * 0.1 + 0.05 * (rng() % 2);
    EXPECT_NEAR(auroc(in, out), oracle::auroc_pairs(in, out), 1e-12);
  }
}

TEST(Auroc, ComplementWithoutTies) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> a(40), b(30);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng) + 0.5;
  EXPECT_NEAR(auroc(a, b) + auroc(b, a), 1.0, 1e-15);
}

TEST(SamplingBias, FixedPoints) {
  EXPECT_NEAR(sampling_bias(std::vector<std::size_t>{5, 5, 5, 5}), 0.0, 1e-15);
  EXPECT_NEAR(sampling_bias(std::vector<std::size_t>{0, 9, 0}), 1.0, 1e-15);
  const double expected = 1.0 - oracle::entropy({0.75, 0.25}) / std::log(2.0);
  EXPECT_NEAR(sampling_bias(std::vector<std::size_t>{3, 1}), expected, 1e-12);
  EXPECT_NEAR(sampling_bias(std::vector<std::size_t>{3, 1}), 0.1887, 5e-5);
  EXPECT_THROW(sampling_bias(std::vector<std::size_t>{0, 0}), ContractError);
}

TEST(SamplingBias, PermutationInvariantAndBounded) {
  std::vector<std::size_t> c{7, 0, 3, 12, 1};
  const double base = sampling_bias(c);
  std::sort(c.begin(), c.end());
  do {
    EXPECT_NEAR(sampling_bias(c), base, 1e-15);
  } while (std::next_permutation(c.begin(), c.end()));
  EXPECT_GE(base, 0.0);
  EXPECT_LE(base, 1.0);
}

TEST(Mce, FixedPoints) {
  EXPECT_NEAR(mce(std::vector<ShiftCell>{{"a", 1, 1.0, 0.0}, {"b", 2, 1.0, 0.0}}), 0.0, 1e-15);
  EXPECT_NEAR(mce(std::vector<ShiftCell>{{"a", 1, 0.7, 0.0}, {"a", 2, 0.7, 0.0}, {"b", 1, 0.7, 0.0}}), 0.3, 1e-12);
  EXPECT_NEAR(mce(std::vector<ShiftCell>{{"a", 1, 0.9, 0.0}, {"a", 2, 0.7, 0.0}}), 0.2, 1e-12);
}

TEST(QueryCost, CountsScoringPasses) {
  ModelConfig cfg;
  cfg.d_in = 3;
  cfg.batch_size = 10;
  Model m(cfg, 2);
  m.mark_classifier_fitted();
  const Matrix x = Matrix::Random(95, 3);

  auto before = snapshot(m);
  m.predict_proba(x);  // entropy-style scoring
  const auto entropy_cost = query_cost(before, snapshot(m));
  EXPECT_EQ(entropy_cost.forward_passes, 10u);
  EXPECT_GE(entropy_cost.wall_ms, 0.0);

  before = snapshot(m);
  m.stochastic_proba(x, 50, 0.3, 1);
  EXPECT_EQ(query_cost(before, snapshot(m)).forward_passes, 500u);

  before = snapshot(m);
  const Matrix z = m.encode(x);  // featuresim / fre scoring encode once
  m.classify_features(z);
  EXPECT_EQ(query_cost(before, snapshot(m)).forward_passes, entropy_cost.forward_passes);
}

TEST(IterationReport, JsonlRoundTrip) {
  IterationReport r;
  r.iteration = 3;
  r.labeled_count = 300;
  r.accuracy = 0.8125;
  r.ece = 0.1 / 3.0;
  r.nll = 0.7;
  r.brier = 0.3;
  r.sampling_bias = 0.05;
  r.auroc_ood = 0.9;
  r.shifts = {{"additive_gaussian", 1, 0.8, 0.1}, {"mean_drift", 5, 0.6, 0.2}};
  r.mce = mce(r.shifts);
  r.query_wall_ms = 12.5;
  r.forward_passes_used = 32;
  r.strategy = "fre";
  r.seed = 7;
  r.acquired_count = 100;
  r.deficit_fills = 2;
  r.class_counts = {100, 200};
  r.acquired_predicted_hist = {50, 50};
  const std::string line = r.to_jsonl();
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NE(line.find("\"mce_normalization\":\"none\""), std::string::npos);
  const auto back = IterationReport::from_jsonl(line);
  EXPECT_EQ(back.to_jsonl(), line);
  EXPECT_EQ(back.ece, r.ece);
  EXPECT_EQ(back.auroc_ood, r.auroc_ood);
  EXPECT_NEAR(back.shifted_error(), 0.3, 1e-12);
  EXPECT_NEAR(back.shifted_ece(), 0.15, 1e-12);
  EXPECT_THROW(IterationReport::from_jsonl("{not json"), Error);
}
