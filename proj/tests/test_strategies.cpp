#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "scal/errors.hpp"
#include "scal/log.hpp"
#include "scal/strategies.hpp"

using namespace scal;

namespace {

std::vector<SampleId> iota_ids(std::size_t n, SampleId start = 0) {
  std::vector<SampleId> ids(n);
  std::iota(ids.begin(), ids.end(), start);
  return ids;
}

Matrix random_probs(Index n, Index k, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.7);
  Matrix p(n, k);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) p(i, j) = g(rng) + 1e-12;
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

TEST(Registry, NamesAndDescriptors) {
  EXPECT_EQ(all_strategies().size(), 6u);
  EXPECT_EQ(strategy_by_name("featuresim").direction, Direction::select_min);
  EXPECT_EQ(strategy_by_name("fre").direction, Direction::select_max);
  EXPECT_TRUE(strategy_by_name("fre").per_class_quota);
  EXPECT_TRUE(strategy_by_name("featuresim").contrastive_training);
  EXPECT_FALSE(strategy_by_name("entropy").per_class_quota);
  for (const auto& d : all_strategies()) EXPECT_EQ(&strategy_descriptor(d.kind), &d);
  try {
    strategy_by_name("featursim");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* n : {"random", "entropy", "bald", "coreset", "featuresim", "fre"})
      EXPECT_NE(msg.find(n), std::string::npos) << msg;
  }
}

TEST(Entropy, FixedPoints) {
  Matrix p(3, 4);
  p << 1, 0, 0, 0, 0.25, 0.25, 0.25, 0.25, 0.7, 0.2, 0.1, 0.0;
  const Vector h = score_entropy(p);
  EXPECT_NEAR(h(0), 0.0, 1e-15);
  EXPECT_NEAR(h(1), std::log(4.0), 1e-12);
  EXPECT_NEAR(h(2), oracle::entropy({0.7, 0.2, 0.1}), 1e-12);
  EXPECT_NEAR(h(2), 0.8018, 5e-5);
}

TEST(Entropy, BoundsAndPurity) {
  std::mt19937_64 rng(1);
  const Matrix p = random_probs(50, 5, rng);
  const Vector h = score_entropy(p);
  EXPECT_GE(h.minCoeff(), 0.0);
  EXPECT_LE(h.maxCoeff(), std::log(5.0) + 1e-12);
  EXPECT_TRUE(h == score_entropy(p));
}

TEST(Entropy, RejectsNonStochasticRows) {
  Matrix p(1, 2);
  p << 0.5, 0.6;
  EXPECT_THROW(score_entropy(p), ContractError);
  p << 0.5, 0.50005;
  EXPECT_NO_THROW(score_entropy(p));
}

TEST(Bald, FixedPoints) {
  Matrix a(1, 2), b(1, 2);
  a << 1, 0;
  b << 0, 1;
  EXPECT_NEAR(score_bald(std::vector<Matrix>{a, b})(0), std::log(2.0), 1e-12);
  EXPECT_NEAR(score_bald(std::vector<Matrix>{a, a, a})(0), 0.0, 1e-15);
  EXPECT_THROW(score_bald(std::vector<Matrix>{a}), UsageError);
}

TEST(Bald, BoundedByPredictiveEntropy) {
  std::mt19937_64 rng(2);
  std::vector<Matrix> slices;
  for (int t = 0; t < 7; ++t) slices.push_back(random_probs(30, 4, rng));
  Matrix mean = Matrix::Zero(30, 4);
  for (const auto& s : slices) mean += s / 7.0;
  const Vector mi = score_bald(slices);
  const Vector h = score_entropy(mean);
  for (Index i = 0; i < 30; ++i) {
    EXPECT_GE(mi(i), 0.0);
    EXPECT_LE(mi(i), h(i) + 1e-12);
  }
}

TEST(Featuresim, FixedPoints) {
  Matrix bank(1, 2);
  bank << 1, 0;
  Vector q(2);
  q << 3, 4;
  EXPECT_NEAR(score_featuresim(q, bank), 3.0, 1e-15);
  EXPECT_NEAR(score_featuresim(q, bank, FeaturesimMode::symmetric), 0.6, 1e-15);
  Matrix bank2(2, 2);
  bank2 << 3, 4, -1, 0.5;
  EXPECT_NEAR(score_featuresim(q, bank2), 5.0, 1e-12);  // identical vector: ||z||
  Vector orth(2);
  orth << 0, 2;
  EXPECT_NEAR(score_featuresim(orth, bank), 0.0, 1e-15);
  EXPECT_THROW(score_featuresim(q, Matrix(0, 2)), ContractError);
}

TEST(Featuresim, CauchySchwarzBound) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Matrix bank(20, 6), queries(40, 6);
  for (Index i = 0; i < bank.size(); ++i) bank(i) = g(rng);
  for (Index i = 0; i < queries.size(); ++i) queries(i) = 3.0 * g(rng);
  std::vector<int> labels(20), predicted(40);
  for (int i = 0; i < 20; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
  for (int i = 0; i < 40; ++i) predicted[static_cast<std::size_t>(i)] = i % 3;
  const Vector s = score_featuresim(queries, predicted, bank, labels, 3);
  for (Index i = 0; i < 40; ++i) {
    EXPECT_LE(std::abs(s(i)), queries.row(i).norm() + 1e-12);
    // Batch form equals the single-query form on the class bank.
    std::vector<Index> rows;
    for (Index l = 0; l < 20; ++l)
      if (labels[static_cast<std::size_t>(l)] == predicted[static_cast<std::size_t>(i)]) rows.push_back(l);
    Matrix cls(static_cast<Index>(rows.size()), 6);
    for (std::size_t r = 0; r < rows.size(); ++r) cls.row(static_cast<Index>(r)) = bank.row(rows[r]);
    EXPECT_NEAR(s(i), score_featuresim(queries.row(i), cls), 1e-12);
  }
}

TEST(Featuresim, EmptyClassFallsBackToWholeBank) {
  std::vector<std::string> warnings;
  auto prev = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  Matrix bank(2, 2);
  bank << 1, 0, 0, 1;
  Matrix q(1, 2);
  q << 2, 5;
  const Vector s = score_featuresim(q, std::vector<int>{2}, bank, std::vector<int>{0, 1}, 3);
  set_warning_sink(prev);
  EXPECT_NEAR(s(0), 5.0, 1e-15);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(SelectPerClass, OnePerClass) {
  std::vector<ScoredCandidate> c;
  for (SampleId i = 0; i < 30; ++i) c.push_back({i, static_cast<int>(i % 10), static_cast<double>(i), "x"});
  const auto sel = select_per_class(c, {10, 10, Direction::select_max});
  ASSERT_EQ(sel.ids.size(), 10u);
  for (auto n : sel.per_class) EXPECT_EQ(n, 1u);
  EXPECT_EQ(sel.deficit_fills, 0u);
  std::set<int> classes;
  for (auto id : sel.ids) classes.insert(static_cast<int>(id % 10));
  EXPECT_EQ(classes.size(), 10u);
  // Best (largest score) per class: ids 20..29.
  for (auto id : sel.ids) EXPECT_GE(id, 20u);
}

TEST(SelectPerClass, DeficitRefill) {
  std::vector<ScoredCandidate> c;
  c.push_back({100, 0, 0.5, "x"});
  for (SampleId i = 0; i < 10; ++i) c.push_back({i, 1, static_cast<double>(i), "x"});
  const auto sel = select_per_class(c, {4, 2, Direction::select_max});
  ASSERT_EQ(sel.ids.size(), 4u);
  EXPECT_EQ(sel.per_class[0], 1u);
  EXPECT_EQ(sel.per_class[1], 3u);
  EXPECT_EQ(sel.deficit_fills, 1u);
  EXPECT_NE(std::find(sel.ids.begin(), sel.ids.end(), SampleId{100}), sel.ids.end());
}

TEST(SelectPerClass, TieBreaksByLowerId) {
  std::vector<ScoredCandidate> c{{7, 0, 1.0, "x"}, {3, 0, 1.0, "x"}, {5, 1, 2.0, "x"}};
  for (Direction d : {Direction::select_min, Direction::select_max}) {
    const auto sel = select_per_class(c, {2, 2, d});
    EXPECT_NE(std::find(sel.ids.begin(), sel.ids.end(), SampleId{3}), sel.ids.end());
    EXPECT_EQ(std::find(sel.ids.begin(), sel.ids.end(), SampleId{7}), sel.ids.end());
  }
}

TEST(SelectPerClass, DirectionMinPicksSmallest) {
  std::vector<ScoredCandidate> c;
  for (SampleId i = 0; i < 20; ++i) c.push_back({i, static_cast<int>(i % 2), static_cast<double>(i), "x"});
  const auto sel = select_per_class(c, {4, 2, Direction::select_min});
  std::vector<SampleId> ids = sel.ids;
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<SampleId>{0, 1, 2, 3}));
}

TEST(SelectPerClass, RemainderToLowClassIndices) {
  std::vector<ScoredCandidate> c;
  for (SampleId i = 0; i < 40; ++i) c.push_back({i, static_cast<int>(i % 4), static_cast<double>(i), "x"});
  const auto sel = select_per_class(c, {7, 4, Direction::select_max});
  EXPECT_EQ(sel.per_class, (std::vector<std::size_t>{2, 2, 2, 1}));
}

TEST(SelectPerClass, FallbackAndEmpty) {
  std::vector<ScoredCandidate> c;
  for (SampleId i = 0; i < 10; ++i) c.push_back({i, static_cast<int>(i % 5), static_cast<double>(i), "x"});
  const auto sel = select_per_class(c, {3, 5, Direction::select_max});
  EXPECT_TRUE(sel.global_fallback);
  std::vector<SampleId> ids = sel.ids;
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<SampleId>{7, 8, 9}));

  std::vector<std::string> warnings;
  auto prev = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const auto empty = select_per_class({}, {3, 2, Direction::select_max});
  set_warning_sink(prev);
  EXPECT_TRUE(empty.ids.empty());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(SelectPerClass, RandomizedContract) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int K = std::uniform_int_distribution<int>(2, 6)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 40)(rng);
    const std::size_t M = std::uniform_int_distribution<std::size_t>(static_cast<std::size_t>(K), 30)(rng);
    std::vector<double> weights(static_cast<std::size_t>(K));
    for (auto& w : weights) w = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    std::discrete_distribution<int> cls(weights.begin(), weights.end());
    std::vector<ScoredCandidate> c;
    for (std::size_t i = 0; i < n; ++i)
      c.push_back({i * 3 + 1, cls(rng), std::floor(std::uniform_real_distribution<double>(0, 5)(rng)), "x"});
    std::vector<std::string> sink;
    auto prev = set_warning_sink([&](const std::string& m) { sink.push_back(m); });
    const auto sel = select_per_class(c, {M, K, Direction::select_max});
    set_warning_sink(prev);
    EXPECT_EQ(sel.ids.size(), std::min(M, n));
    EXPECT_EQ(std::set<SampleId>(sel.ids.begin(), sel.ids.end()).size(), sel.ids.size());
    if (n == 0) continue;
    const std::size_t cap = (M + static_cast<std::size_t>(K) - 1) / static_cast<std::size_t>(K);
    for (auto count : sel.per_class) EXPECT_LE(count, cap + sel.deficit_fills);
    EXPECT_TRUE(sel.ids == select_per_class(c, {M, K, Direction::select_max}).ids);
  }
}

TEST(SelectTop, GlobalOrder) {
  std::vector<ScoredCandidate> c{{0, 0, 0.2, "x"}, {1, 1, 0.9, "x"}, {2, 1, 0.9, "x"}, {3, 0, 0.5, "x"}};
  EXPECT_EQ(select_top(c, {2, 2, Direction::select_max}).ids, (std::vector<SampleId>{1, 2}));
  EXPECT_EQ(select_top(c, {1, 2, Direction::select_min}).ids, (std::vector<SampleId>{0}));
}

TEST(KCenter, FarthestPointExample) {
  Matrix x(3, 1), seed(1, 1);
  x << 1, 2, 10;
  seed << 0;
  const auto ids = iota_ids(3, 1);
  EXPECT_EQ(select_kcenter_greedy(x, ids, seed, 1), (std::vector<SampleId>{3}));
}

TEST(KCenter, FullBudgetSelectsAll) {
  Matrix x = Matrix::Random(6, 2);
  const auto ids = iota_ids(6, 10);
  auto picks = select_kcenter_greedy(x, ids, Matrix(0, 2), 6);
  std::sort(picks.begin(), picks.end());
  EXPECT_EQ(picks, ids);
  EXPECT_THROW(select_kcenter_greedy(x, ids, Matrix(0, 2), 7), ContractError);
}

TEST(KCenter, NoSeedStartsFarthestFromMean) {
  Matrix x(4, 1);
  x << 0, 1, 2, 9;  // mean 3
  EXPECT_EQ(select_kcenter_greedy(x, iota_ids(4), Matrix(0, 1), 2), (std::vector<SampleId>{3, 0}));
}

TEST(KCenter, TwoApproximationAgainstBruteForce) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 12)(rng);
    const int n_seed = std::uniform_int_distribution<int>(0, 2)(rng);
    const int budget = std::uniform_int_distribution<int>(1, n - 1)(rng);
    Matrix all(n + n_seed, 2);
    for (Index i = 0; i < all.size(); ++i) all(i) = g(rng);
    const Matrix seeds = all.topRows(n_seed);
    const Matrix pool = all.bottomRows(n);
    const auto picks = select_kcenter_greedy(pool, iota_ids(static_cast<std::size_t>(n)), seeds, static_cast<std::size_t>(budget));
    std::vector<int> centers;
    for (int s = 0; s < n_seed; ++s) centers.push_back(s);
    for (auto p : picks) centers.push_back(n_seed + static_cast<int>(p));
    std::vector<int> fixed(centers.begin(), centers.begin() + n_seed);
    const double greedy = oracle::cover_radius(all, centers);
    const double best = oracle::optimal_kcenter_radius(all, fixed, budget);
    EXPECT_LE(greedy, 2.0 * best + 1e-12) << "trial " << trial;
  }
}

TEST(KCenter, RowOrderInvariant) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Matrix x(25, 3), seeds(3, 3);
  for (Index i = 0; i < x.size(); ++i) x(i) = g(rng);
  for (Index i = 0; i < seeds.size(); ++i) seeds(i) = g(rng);
  std::vector<SampleId> ids = iota_ids(25, 100);
  const auto base = select_kcenter_greedy(x, ids, seeds, 8);
  std::vector<Index> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix xp(25, 3);
  std::vector<SampleId> idp(25);
  for (Index i = 0; i < 25; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    idp[static_cast<std::size_t>(i)] = ids[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  EXPECT_EQ(select_kcenter_greedy(xp, idp, seeds, 8), base);
}

TEST(Random, ContractAndDeterminism) {
  const auto ids = iota_ids(10, 5);
  auto all = select_random(ids, 10, 3);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, ids);
  EXPECT_EQ(select_random(ids, 4, 9), select_random(ids, 4, 9));
  EXPECT_THROW(select_random(ids, 11, 1), ContractError);
}

TEST(Random, UniformFrequencies) {
  const auto ids = iota_ids(10);
  std::vector<int> hits(10, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) ++hits[select_random(ids, 1, static_cast<std::uint64_t>(t) * 7919 + 1).front()];
  const double sigma = std::sqrt(trials * 0.1 * 0.9);
  for (int h : hits) EXPECT_NEAR(h, trials * 0.1, 3.0 * sigma);
}
