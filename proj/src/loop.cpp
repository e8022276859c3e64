#include "scal/loop.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "scal/errors.hpp"
#include "scal/log.hpp"

namespace scal {
namespace {

// Seed streams inside one run.
enum SeedTag : std::uint64_t { kInitialPick = 1, kSubset = 2, kRandomPick = 3, kDropout = 4, kModel = 5, kEvalDropout = 6 };

std::uint64_t iteration_seed(std::uint64_t base, SeedTag tag, std::size_t t) {
  return mix_seed(mix_seed(base, tag), t);
}

Matrix rows_of(const Matrix& m, const std::vector<SampleId>& ids) {
  Matrix out(static_cast<Index>(ids.size()), m.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) out.row(static_cast<Index>(r)) = m.row(static_cast<Index>(ids[r]));
  return out;
}

bool uses_bank(StrategyKind kind) {
  return kind == StrategyKind::featuresim || kind == StrategyKind::fre || kind == StrategyKind::coreset;
}

// Labeled feature bank with rows in D_L acquisition order.
class FeatureBank {
 public:
  FeatureBank(FeatureCacheMode mode, int d_feat) : mode_(mode), features_(0, d_feat) {}

  void refresh(const Model& model, const Matrix& universe, const std::vector<SampleId>& labeled,
               const std::vector<int>& labels) {
    if (mode_ == FeatureCacheMode::recompute) {
      features_ = model.encode(rows_of(universe, labeled));
    } else {
      const auto have = static_cast<std::size_t>(features_.rows());
      std::vector<SampleId> fresh(labeled.begin() + static_cast<std::ptrdiff_t>(have), labeled.end());
      const Matrix z = fresh.empty() ? Matrix(0, features_.cols()) : model.encode(rows_of(universe, fresh));
      Matrix merged(static_cast<Index>(labeled.size()), features_.cols());
      merged.topRows(static_cast<Index>(have)) = features_;
      merged.bottomRows(z.rows()) = z;
      features_ = std::move(merged);
    }
    labels_ = labels;
  }

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  FeatureCacheMode mode_;
  Matrix features_;
  std::vector<int> labels_;
};

struct Acquisition {
  std::vector<SampleId> ids;
  std::size_t deficit_fills = 0;
  std::vector<std::size_t> predicted_hist;
  QueryCost cost;
};

// Scores used both for OOD AUROC and, for scored strategies, selection.
// Higher means "more novel" after orientation.
Vector ood_scores(const StrategyDescriptor& strategy, const Model& model, const Matrix& x, const FeatureBank& bank,
                  const ClassPcaModel& pca, const LoopConfig& config, std::uint64_t seed) {
  switch (strategy.kind) {
    case StrategyKind::random:
    case StrategyKind::entropy:
      return score_entropy(model.predict_proba(x));
    case StrategyKind::bald:
      return score_bald(model.stochastic_proba(x, config.tau, model.config().dropout_rate, seed));
    case StrategyKind::coreset: {
      const Matrix z = model.encode(x);
      Vector out(z.rows());
      for (Index i = 0; i < z.rows(); ++i) {
        out(i) = (bank.features().rowwise() - z.row(i)).rowwise().norm().minCoeff();
      }
      return out;
    }
    case StrategyKind::featuresim: {
      const Matrix z = model.encode(x);
      const auto predicted = argmax_rows(model.classify_features(z));
      // Low similarity marks novelty, so negate.
      return -score_featuresim(z, predicted, bank.features(), bank.labels(), model.num_classes(),
                               config.featuresim_mode);
    }
    case StrategyKind::fre: {
      const Matrix z = model.encode(x);
      return fre_scores(pca, z, argmax_rows(model.classify_features(z)));
    }
  }
  throw ConfigError("unhandled strategy");
}

}  // namespace

std::string_view to_string(FeatureCacheMode mode) {
  return mode == FeatureCacheMode::recompute ? "recompute" : "accumulate";
}

FeatureCacheMode parse_feature_cache_mode(std::string_view name) {
  if (name == "recompute") return FeatureCacheMode::recompute;
  if (name == "accumulate") return FeatureCacheMode::accumulate;
  throw ConfigError("unknown feature cache mode '" + std::string(name) + "' (valid: recompute, accumulate)");
}

void LoopConfig::validate() const {
  strategy_by_name(strategy);
  if (acquisition == 0) throw ConfigError("acquisition size M must be positive");
  if (budget == 0 || budget % acquisition != 0) throw ConfigError("budget B must be a positive multiple of M");
  if (subset_size == 0) throw ConfigError("subset_size must be positive");
  if (tau < 2) throw ConfigError("tau must be at least 2");
  if (ece_bins < 1) throw ConfigError("ece bin count must be positive");
}

PoolState::PoolState(std::size_t universe_size) : is_labeled_(universe_size, false) {}

std::vector<SampleId> PoolState::unlabeled() const {
  std::vector<SampleId> out;
  out.reserve(unlabeled_count());
  for (SampleId i = 0; i < is_labeled_.size(); ++i)
    if (!is_labeled_[i]) out.push_back(i);
  return out;
}

void PoolState::acquire(std::span<const SampleId> ids) {
  std::unordered_set<SampleId> batch;
  for (SampleId id : ids) {
    if (id >= is_labeled_.size()) throw ContractError("acquire: unknown sample id " + std::to_string(id));
    if (is_labeled_[id] || !batch.insert(id).second) {
      throw ContractError("acquire: sample id " + std::to_string(id) + " acquired twice");
    }
  }
  for (SampleId id : ids) {
    is_labeled_[id] = true;
    labeled_.push_back(id);
  }
  history_.emplace_back(ids.begin(), ids.end());
}

std::vector<std::string> PoolState::violations() const {
  std::vector<std::string> out;
  std::unordered_set<SampleId> seen;
  std::size_t from_history = 0;
  for (std::size_t t = 0; t < history_.size(); ++t) {
    for (SampleId id : history_[t]) {
      ++from_history;
      if (!seen.insert(id).second) out.push_back("id " + std::to_string(id) + " acquired more than once");
    }
  }
  if (from_history != labeled_.size()) out.push_back("history size disagrees with labeled set");
  std::size_t flagged = 0;
  for (bool b : is_labeled_) flagged += b;
  if (flagged != labeled_.size()) out.push_back("labeled flags disagree with labeled list");
  for (SampleId id : labeled_) {
    if (id >= is_labeled_.size() || !is_labeled_[id]) out.push_back("labeled id " + std::to_string(id) + " not flagged");
  }
  if (labeled_.size() + unlabeled_count() != universe_size()) out.push_back("labeled and unlabeled do not cover the universe");
  return out;
}

Oracle::Oracle(const FeatureMatrix& universe) {
  if (!universe.labels) throw ContractError("oracle: universe has no ground-truth labels");
  truth_ = *universe.labels;
}

std::vector<int> Oracle::label(std::span<const SampleId> ids) const {
  std::vector<int> out;
  out.reserve(ids.size());
  for (SampleId id : ids) {
    if (id >= truth_.size()) throw LookupError("oracle: unknown sample id " + std::to_string(id));
    out.push_back(truth_[id]);
  }
  return out;
}

RunResult run_active_learning(const FeatureMatrix& universe, const EvaluationSets& eval, const LoopConfig& config,
                              const ModelConfig& model_config, const ReportObserver& observer) {
  config.validate();
  const StrategyDescriptor& strategy = strategy_by_name(config.strategy);
  if (!eval.test.labels) throw ContractError("run: test set must be labeled");
  const int K = std::max(universe.num_classes, eval.test.num_classes);
  if (K < 2) throw ContractError("run: need at least two classes");
  if (universe.rows() < static_cast<Index>(config.budget)) {
    warn("run: pool of " + std::to_string(universe.rows()) + " is smaller than the budget; the run will truncate");
  }
  const LossKind loss = config.loss.value_or(strategy.contrastive_training ? LossKind::contrastive
                                                                           : LossKind::cross_entropy);
  const bool per_class = config.per_class.value_or(strategy.per_class_quota);
  const Direction direction = strategy.direction;
  ModelConfig mcfg = model_config;
  mcfg.d_in = static_cast<int>(universe.cols());
  if (strategy.kind == StrategyKind::bald) mcfg.train_dropout = true;

  const Oracle oracle(universe);
  RunResult run;
  run.pool = PoolState(static_cast<std::size_t>(universe.rows()));
  FeatureBank bank(config.feature_cache, mcfg.d_feat);
  std::vector<int> labeled_labels;

  // First batch: uniform at random.
  Acquisition pending;
  {
    const auto all = run.pool.unlabeled();
    const std::size_t m = std::min(config.acquisition, all.size());
    pending.ids = select_random(all, m, iteration_seed(config.seed, kInitialPick, 0));
    pending.predicted_hist.assign(static_cast<std::size_t>(K), 0);
    run.truncated = m < config.acquisition;
  }

  const std::size_t T = config.iterations();
  for (std::size_t t = 1; t <= T; ++t) {
    const auto revealed = oracle.label(pending.ids);
    run.pool.acquire(pending.ids);
    labeled_labels.insert(labeled_labels.end(), revealed.begin(), revealed.end());
    if (auto v = run.pool.violations(); !v.empty()) throw Error("pool invariant violated: " + v.front());

    FeatureMatrix labeled = universe.subset(run.pool.labeled());
    labeled.labels = labeled_labels;
    mcfg.seed = iteration_seed(config.seed, kModel, t);
    Model model(mcfg, K);
    train(model, labeled, loss);

    if (uses_bank(strategy.kind)) bank.refresh(model, universe.values, run.pool.labeled(), labeled_labels);
    ClassPcaModel pca;
    if (strategy.kind == StrategyKind::fre) pca = fit_class_pca(bank.features(), bank.labels(), K, config.pca);

    IterationReport report;
    report.iteration = static_cast<int>(t);
    report.labeled_count = run.pool.labeled().size();
    report.strategy = std::string(strategy.name);
    report.seed = config.seed;
    report.acquired_count = pending.ids.size();
    report.deficit_fills = pending.deficit_fills;
    report.acquired_predicted_hist = pending.predicted_hist;
    report.query_wall_ms = config.record_wall_time ? pending.cost.wall_ms : 0.0;
    report.forward_passes_used = pending.cost.forward_passes;

    const auto& test_labels = *eval.test.labels;
    const Matrix test_probs = model.predict_proba(eval.test.values);
    report.accuracy = accuracy(test_probs, test_labels);
    report.ece = ece(test_probs, test_labels, config.ece_bins);
    report.nll = nll(test_probs, test_labels);
    report.brier = brier(test_probs, test_labels);
    for (const auto& shifted : eval.shifted) {
      const Matrix probs = model.predict_proba(shifted.data.values);
      report.shifts.push_back({std::string(to_string(shifted.spec.kind)), shifted.spec.intensity,
                               accuracy(probs, *shifted.data.labels), ece(probs, *shifted.data.labels, config.ece_bins)});
    }
    report.mce = mce(report.shifts);
    report.class_counts.assign(static_cast<std::size_t>(K), 0);
    for (int y : labeled_labels) ++report.class_counts[static_cast<std::size_t>(y)];
    report.sampling_bias = sampling_bias(report.class_counts);
    if (eval.ood) {
      const auto eval_seed = iteration_seed(config.seed, kEvalDropout, t);
      const Vector in = ood_scores(strategy, model, eval.test.values, bank, pca, config, eval_seed);
      const Vector out = ood_scores(strategy, model, eval.ood->values, bank, pca, config, eval_seed + 1);
      report.auroc_ood = auroc(std::span<const double>(in.data(), static_cast<std::size_t>(in.size())),
                               std::span<const double>(out.data(), static_cast<std::size_t>(out.size())));
    }

    const bool last = t == T || run.truncated;
    if (last) {
      report.truncated = run.truncated;
      run.reports.push_back(report);
      if (observer) observer(report);
      run.final_pca = pca;
      run.bank_features = bank.features();
      run.bank_labels = bank.labels();
      run.final_model.emplace(std::move(model));
      break;
    }
    run.reports.push_back(report);
    if (observer) observer(report);

    // Query the next batch.
    const auto unlabeled = run.pool.unlabeled();
    if (unlabeled.empty()) {
      run.truncated = true;
      run.reports.back().truncated = true;
      run.final_pca = pca;
      run.bank_features = bank.features();
      run.bank_labels = bank.labels();
      run.final_model.emplace(std::move(model));
      break;
    }
    const std::size_t m = std::min(config.acquisition, unlabeled.size());
    if (m < config.acquisition) run.truncated = true;

    Acquisition next;
    next.predicted_hist.assign(static_cast<std::size_t>(K), 0);
    const auto before = snapshot(model);
    if (strategy.kind == StrategyKind::random) {
      next.ids = select_random(unlabeled, m, iteration_seed(config.seed, kRandomPick, t));
    } else {
      auto subset = select_random(unlabeled, std::min(config.subset_size, unlabeled.size()),
                                  iteration_seed(config.seed, kSubset, t));
      std::sort(subset.begin(), subset.end());
      const Matrix x = rows_of(universe.values, subset);
      if (strategy.kind == StrategyKind::coreset) {
        next.ids = select_kcenter_greedy(model.encode(x), subset, bank.features(), m);
      } else {
        Vector scores;
        std::vector<int> predicted;
        switch (strategy.kind) {
          case StrategyKind::entropy: {
            const Matrix probs = model.predict_proba(x);
            predicted = argmax_rows(probs);
            scores = score_entropy(probs);
            break;
          }
          case StrategyKind::bald: {
            const auto slices =
                model.stochastic_proba(x, config.tau, mcfg.dropout_rate, iteration_seed(config.seed, kDropout, t));
            Matrix mean = Matrix::Zero(x.rows(), K);
            for (const auto& s : slices) mean += s;
            predicted = argmax_rows(mean);
            scores = score_bald(slices);
            break;
          }
          case StrategyKind::featuresim: {
            const Matrix z = model.encode(x);
            predicted = argmax_rows(model.classify_features(z));
            scores = score_featuresim(z, predicted, bank.features(), bank.labels(), K, config.featuresim_mode);
            break;
          }
          case StrategyKind::fre: {
            const Matrix z = model.encode(x);
            predicted = argmax_rows(model.classify_features(z));
            scores = fre_scores(pca, z, predicted);
            break;
          }
          default:
            throw ConfigError("unhandled strategy");
        }
        std::vector<ScoredCandidate> candidates(subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i) {
          candidates[i] = {subset[i], predicted[i], scores(static_cast<Index>(i)), strategy.name};
        }
        const SelectionRequest request{m, K, direction};
        const Selection sel = per_class ? select_per_class(candidates, request) : select_top(candidates, request);
        next.ids = sel.ids;
        next.deficit_fills = sel.deficit_fills;
        next.predicted_hist = sel.per_class;
      }
    }
    next.cost = query_cost(before, snapshot(model));
    pending = std::move(next);
  }
  return run;
}

std::vector<std::string> audit_run(const RunResult& run, const LoopConfig& config, int num_classes) {
  std::vector<std::string> out = run.pool.violations();
  const auto& history = run.pool.history();
  if (history.size() != run.reports.size()) out.push_back("report count differs from acquisition rounds");
  std::size_t cumulative = 0;
  for (std::size_t t = 0; t < history.size(); ++t) {
    cumulative += history[t].size();
    const bool final_round = t + 1 == history.size();
    if (history[t].size() != config.acquisition && !(final_round && run.truncated)) {
      out.push_back("round " + std::to_string(t + 1) + " acquired " + std::to_string(history[t].size()) +
                    " samples instead of M");
    }
    if (t < run.reports.size() && run.reports[t].labeled_count != cumulative) {
      out.push_back("report " + std::to_string(t + 1) + " labeled_count disagrees with history");
    }
    if (!run.truncated && cumulative != (t + 1) * config.acquisition) {
      out.push_back("|D_L| after round " + std::to_string(t + 1) + " is not t*M");
    }
  }
  const StrategyDescriptor& strategy = strategy_by_name(config.strategy);
  const bool per_class = config.per_class.value_or(strategy.per_class_quota);
  const auto K = static_cast<std::size_t>(num_classes);
  if (per_class && config.acquisition >= K) {
    const std::size_t quota = config.acquisition / K;
    const std::size_t remainder = config.acquisition % K;
    for (std::size_t t = 1; t < run.reports.size(); ++t) {
      const auto& r = run.reports[t];
      if (r.acquired_predicted_hist.size() != K) {
        out.push_back("report " + std::to_string(t + 1) + " lacks a predicted-class histogram");
        continue;
      }
      if (r.acquired_count < config.acquisition) continue;
      for (std::size_t k = 0; k < K; ++k) {
        const auto expected = static_cast<long long>(quota + (k < remainder ? 1 : 0));
        const auto got = static_cast<long long>(r.acquired_predicted_hist[k]);
        if (std::llabs(got - expected) > static_cast<long long>(r.deficit_fills)) {
          out.push_back("report " + std::to_string(t + 1) + " class " + std::to_string(k) +
                        " deviates from its quota beyond the deficit fills");
        }
      }
    }
  }
  return out;
}

}  // namespace scal
