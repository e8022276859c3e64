#include "scal/strategies.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <random>

#include "scal/errors.hpp"
#include "scal/log.hpp"

namespace scal {
namespace {

constexpr std::array<StrategyDescriptor, 6> kStrategies = {{
    {StrategyKind::random, "random", Direction::select_max, false, false},
    {StrategyKind::entropy, "entropy", Direction::select_max, false, false},
    {StrategyKind::bald, "bald", Direction::select_max, false, false},
    {StrategyKind::coreset, "coreset", Direction::select_max, false, false},
    {StrategyKind::featuresim, "featuresim", Direction::select_min, true, true},
    {StrategyKind::fre, "fre", Direction::select_max, true, true},
}};

// True when `a` ranks ahead of `b`.
bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b, Direction dir) {
  if (a.score != b.score) return dir == Direction::select_max ? a.score > b.score : a.score < b.score;
  return a.id < b.id;
}

void check_candidates(std::span<const ScoredCandidate> candidates, int num_classes) {
  for (const auto& c : candidates) {
    if (!std::isfinite(c.score)) throw ContractError("selection: non-finite score for id " + std::to_string(c.id));
    if (c.predicted < 0 || c.predicted >= num_classes) {
      throw ContractError("selection: predicted class out of range for id " + std::to_string(c.id));
    }
  }
}

}  // namespace

std::span<const StrategyDescriptor> all_strategies() { return kStrategies; }

const StrategyDescriptor& strategy_descriptor(StrategyKind kind) {
  for (const auto& d : kStrategies)
    if (d.kind == kind) return d;
  throw ConfigError("unknown strategy kind");
}

const StrategyDescriptor& strategy_by_name(std::string_view name) {
  for (const auto& d : kStrategies)
    if (d.name == name) return d;
  std::string valid;
  for (const auto& d : kStrategies) {
    if (!valid.empty()) valid += " | ";
    valid += d.name;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "' (valid: " + valid + ")");
}

Vector score_bald(std::span<const Matrix> slices) {
  if (slices.size() < 2) throw UsageError("bald: needs at least 2 stochastic passes");
  const Index n = slices[0].rows();
  const Index k = slices[0].cols();
  Matrix mean = Matrix::Zero(n, k);
  Vector mean_entropy = Vector::Zero(n);
  for (const Matrix& s : slices) {
    if (s.rows() != n || s.cols() != k) throw ShapeError("bald: slices differ in shape");
    mean += s;
    mean_entropy += score_entropy(s);
  }
  const auto tau = static_cast<double>(slices.size());
  mean /= tau;
  mean_entropy /= tau;
  return (score_entropy(mean) - mean_entropy).cwiseMax(0.0);
}

Vector score_featuresim(const Matrix& queries, std::span<const int> predicted, const Matrix& labeled,
                        std::span<const int> labeled_labels, int num_classes, FeaturesimMode mode) {
  if (static_cast<std::size_t>(queries.rows()) != predicted.size()) throw ShapeError("featuresim: size mismatch");
  if (static_cast<std::size_t>(labeled.rows()) != labeled_labels.size()) throw ShapeError("featuresim: bank size mismatch");
  if (labeled.rows() == 0) throw ContractError("featuresim: empty labeled bank");
  if (queries.rows() > 0 && queries.cols() != labeled.cols()) throw ShapeError("featuresim: feature dimension mismatch");

  // Labeled rows scaled to unit norm (zero rows stay zero).
  Matrix unit = labeled;
  for (Index l = 0; l < unit.rows(); ++l) {
    const double norm = unit.row(l).norm();
    if (norm > 0.0) unit.row(l) /= norm;
  }

  std::vector<std::vector<Index>> bank_rows(static_cast<std::size_t>(num_classes));
  for (std::size_t l = 0; l < labeled_labels.size(); ++l) {
    if (labeled_labels[l] < 0 || labeled_labels[l] >= num_classes) throw ContractError("featuresim: label out of range");
    bank_rows[static_cast<std::size_t>(labeled_labels[l])].push_back(static_cast<Index>(l));
  }
  std::vector<std::vector<Index>> query_rows(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || predicted[i] >= num_classes) throw ContractError("featuresim: predicted class out of range");
    query_rows[static_cast<std::size_t>(predicted[i])].push_back(static_cast<Index>(i));
  }

  Vector out(queries.rows());
  for (int k = 0; k < num_classes; ++k) {
    const auto& qs = query_rows[static_cast<std::size_t>(k)];
    if (qs.empty()) continue;
    const auto& bs = bank_rows[static_cast<std::size_t>(k)];
    Matrix bank;
    if (bs.empty()) {
      warn("featuresim: no labeled samples of class " + std::to_string(k) + "; scoring against the whole bank");
      bank = unit;
    } else {
      bank = unit(bs, Eigen::all);
    }
    const Matrix q = queries(qs, Eigen::all);
    const Matrix sims = q * bank.transpose();
    for (std::size_t r = 0; r < qs.size(); ++r) {
      double s = sims.row(static_cast<Index>(r)).maxCoeff();
      if (mode == FeaturesimMode::symmetric) {
        const double qn = q.row(static_cast<Index>(r)).norm();
        s = qn > 0.0 ? s / qn : 0.0;
      }
      out(qs[r]) = s;
    }
  }
  return out;
}

Selection select_top(std::span<const ScoredCandidate> candidates, const SelectionRequest& request) {
  check_candidates(candidates, request.num_classes);
  Selection sel;
  sel.per_class.assign(static_cast<std::size_t>(request.num_classes), 0);
  std::vector<ScoredCandidate> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end(),
            [&](const auto& a, const auto& b) { return ranks_before(a, b, request.direction); });
  const std::size_t take = std::min(request.budget, sorted.size());
  for (std::size_t i = 0; i < take; ++i) {
    sel.ids.push_back(sorted[i].id);
    ++sel.per_class[static_cast<std::size_t>(sorted[i].predicted)];
  }
  return sel;
}

Selection select_per_class(std::span<const ScoredCandidate> candidates, const SelectionRequest& request) {
  if (request.num_classes < 1) throw ConfigError("selection: class count must be positive");
  if (candidates.empty()) {
    warn("selection: empty candidate set");
    Selection empty;
    empty.per_class.assign(static_cast<std::size_t>(request.num_classes), 0);
    return empty;
  }
  const auto K = static_cast<std::size_t>(request.num_classes);
  if (request.budget < K) {
    Selection sel = select_top(candidates, request);
    sel.global_fallback = true;
    return sel;
  }
  check_candidates(candidates, request.num_classes);

  std::vector<ScoredCandidate> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end(),
            [&](const auto& a, const auto& b) { return ranks_before(a, b, request.direction); });

  const std::size_t quota = request.budget / K;
  const std::size_t remainder = request.budget - K * quota;
  const std::size_t target = std::min(request.budget, sorted.size());

  Selection sel;
  sel.per_class.assign(K, 0);
  std::vector<bool> taken(sorted.size(), false);
  // `sorted` is already in global rank order, so one pass fills each class
  // with its best candidates.
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto k = static_cast<std::size_t>(sorted[i].predicted);
    const std::size_t class_quota = quota + (k < remainder ? 1 : 0);
    if (sel.per_class[k] < class_quota) {
      taken[i] = true;
      ++sel.per_class[k];
      sel.ids.push_back(sorted[i].id);
    }
  }
  for (std::size_t i = 0; i < sorted.size() && sel.ids.size() < target; ++i) {
    if (taken[i]) continue;
    taken[i] = true;
    ++sel.per_class[static_cast<std::size_t>(sorted[i].predicted)];
    sel.ids.push_back(sorted[i].id);
    ++sel.deficit_fills;
  }
  return sel;
}

std::vector<SampleId> select_kcenter_greedy(const Matrix& unlabeled, std::span<const SampleId> ids,
                                            const Matrix& labeled, std::size_t budget) {
  const auto n = static_cast<std::size_t>(unlabeled.rows());
  if (ids.size() != n) throw ShapeError("kcenter: id count does not match rows");
  if (budget > n) throw ContractError("kcenter: budget exceeds the number of unlabeled points");
  if (labeled.rows() > 0 && labeled.cols() != unlabeled.cols()) throw ShapeError("kcenter: dimension mismatch");

  // Pairwise distances are evaluated row by row so each value depends only
  // on its two points, not on their positions in the matrices.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (Index l = 0; l < labeled.rows(); ++l) {
      nearest[i] = std::min(nearest[i], (unlabeled.row(static_cast<Index>(i)) - labeled.row(l)).squaredNorm());
    }
  }
  if (labeled.rows() == 0 && n > 0) {
    const RowVector mean = unlabeled.colwise().mean();
    for (std::size_t i = 0; i < n; ++i) nearest[i] = (unlabeled.row(static_cast<Index>(i)) - mean).squaredNorm();
  }

  std::vector<SampleId> picks;
  std::vector<bool> chosen(n, false);
  picks.reserve(budget);
  for (std::size_t round = 0; round < budget; ++round) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      if (best == n || nearest[i] > nearest[best] || (nearest[i] == nearest[best] && ids[i] < ids[best])) best = i;
    }
    chosen[best] = true;
    picks.push_back(ids[best]);
    if (round == 0 && labeled.rows() == 0) {
      // The mean was only a bootstrap; distances now refer to the first center.
      for (std::size_t i = 0; i < n; ++i) nearest[i] = std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i],
                            (unlabeled.row(static_cast<Index>(i)) - unlabeled.row(static_cast<Index>(best))).squaredNorm());
    }
  }
  return picks;
}

std::vector<SampleId> select_random(std::span<const SampleId> ids, std::size_t budget, std::uint64_t seed) {
  if (budget > ids.size()) {
    throw ContractError("random selection: budget " + std::to_string(budget) + " exceeds " +
                        std::to_string(ids.size()) + " candidates");
  }
  std::vector<SampleId> pool(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < budget; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(budget);
  return pool;
}

}  // namespace scal
