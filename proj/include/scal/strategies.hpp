#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scal/metrics.hpp"
#include "scal/pca.hpp"
#include "scal/types.hpp"

namespace scal {

enum class StrategyKind { random, entropy, bald, coreset, featuresim, fre };
enum class Direction { select_min, select_max };

struct StrategyDescriptor {
  StrategyKind kind;
  std::string_view name;
  // Which end of the score ranking is acquired. Random and coreset have
  // their own selectors and ignore it.
  Direction direction;
  // Acquires M/K samples per predicted class.
  bool per_class_quota;
  // Default training objective when the loop config says "auto".
  bool contrastive_training;
};

// Name lookup over random | entropy | bald | coreset | featuresim | fre.
// Unknown names raise ConfigError listing the valid ones.
const StrategyDescriptor& strategy_by_name(std::string_view name);
const StrategyDescriptor& strategy_descriptor(StrategyKind kind);
std::span<const StrategyDescriptor> all_strategies();

// -sum_k p_k ln p_k per row. Rows must sum to 1 within 1e-4.
template <typename Derived>
Vector score_entropy(const Eigen::MatrixBase<Derived>& probs) {
  detail::check_probability_rows(probs, 1e-4, "entropy");
  Vector out(probs.rows());
  for (Index i = 0; i < probs.rows(); ++i) {
    double h = 0.0;
    for (Index k = 0; k < probs.cols(); ++k) {
      const double p = probs(i, k);
      if (p > 0.0) h -= p * std::log(p);
    }
    out(i) = h;
  }
  return out;
}

// Mutual information H[mean_t p_t] - mean_t H[p_t], clamped at 0.
Vector score_bald(std::span<const Matrix> slices);

enum class FeaturesimMode {
  literal,    // max_l (z_l / ||z_l||) . z: query left unnormalized
  symmetric,  // plain cosine similarity
};

// Similarity of one query feature to its predicted class's labeled bank.
template <typename QueryDerived, typename BankDerived>
double score_featuresim(const Eigen::MatrixBase<QueryDerived>& query, const Eigen::MatrixBase<BankDerived>& bank,
                        FeaturesimMode mode = FeaturesimMode::literal) {
  if (bank.rows() == 0) throw ContractError("featuresim: empty labeled bank");
  const Vector q = query.derived().template cast<double>().reshaped();
  double best = -std::numeric_limits<double>::infinity();
  const double q_norm = q.norm();
  for (Index l = 0; l < bank.rows(); ++l) {
    const double l_norm = bank.row(l).norm();
    double s = l_norm > 0.0 ? bank.row(l).dot(q.transpose()) / l_norm : 0.0;
    if (mode == FeaturesimMode::symmetric) s = q_norm > 0.0 ? s / q_norm : 0.0;
    best = std::max(best, s);
  }
  return best;
}

// Batch form. Queries with predicted class k are compared to labeled rows
// with label k; an empty class falls back to the whole labeled bank (with a
// warning). Uses one matrix product per class.
Vector score_featuresim(const Matrix& queries, std::span<const int> predicted, const Matrix& labeled,
                        std::span<const int> labeled_labels, int num_classes,
                        FeaturesimMode mode = FeaturesimMode::literal);

template <typename Derived>
double score_fre(const Eigen::MatrixBase<Derived>& query, int predicted, const ClassPcaModel& pca) {
  return fre_score(pca, query, predicted);
}

struct ScoredCandidate {
  SampleId id = 0;
  int predicted = 0;
  double score = 0.0;
  std::string_view tag;
};

struct SelectionRequest {
  std::size_t budget = 0;  // M
  int num_classes = 0;     // K
  Direction direction = Direction::select_max;
};

struct Selection {
  std::vector<SampleId> ids;
  std::vector<std::size_t> per_class;  // picks per predicted class
  std::size_t deficit_fills = 0;
  bool global_fallback = false;
};

// floor(M/K) best candidates per predicted class, the remainder M mod K
// handed one each to the lowest class indices, class shortfalls refilled
// from the best remaining candidates overall. Falls back to a global top-M
// when M < K. Ties break by ascending id.
Selection select_per_class(std::span<const ScoredCandidate> candidates, const SelectionRequest& request);

// Plain top-M in the requested direction (entropy and BALD baselines).
Selection select_top(std::span<const ScoredCandidate> candidates, const SelectionRequest& request);

// Farthest-first traversal: repeatedly picks the candidate farthest from
// its nearest center, labeled rows seeding the centers. With no labeled
// rows the first pick is the candidate farthest from the candidate mean.
std::vector<SampleId> select_kcenter_greedy(const Matrix& unlabeled, std::span<const SampleId> ids,
                                            const Matrix& labeled, std::size_t budget);

// Uniform sample without replacement; deterministic per seed.
std::vector<SampleId> select_random(std::span<const SampleId> ids, std::size_t budget, std::uint64_t seed);

}  // namespace scal
