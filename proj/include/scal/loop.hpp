#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scal/datasets.hpp"
#include "scal/feature_matrix.hpp"
#include "scal/metrics.hpp"
#include "scal/model.hpp"
#include "scal/pca.hpp"
#include "scal/strategies.hpp"

namespace scal {

// How the labeled feature bank used by featuresim/fre/coreset is built.
enum class FeatureCacheMode {
  recompute,   // every labeled sample re-encoded by the current model
  accumulate,  // each sample encoded once, by the model of the iteration it joined
};

std::string_view to_string(FeatureCacheMode mode);
FeatureCacheMode parse_feature_cache_mode(std::string_view name);

struct LoopConfig {
  std::size_t budget = 1000;       // B
  std::size_t acquisition = 100;   // M
  std::size_t subset_size = 2000;  // unlabeled candidates scored per iteration
  std::string strategy = "featuresim";
  std::optional<LossKind> loss;      // unset: strategy default
  std::optional<bool> per_class;     // unset: strategy default
  FeatureCacheMode feature_cache = FeatureCacheMode::recompute;
  FeaturesimMode featuresim_mode = FeaturesimMode::literal;
  PcaOptions pca;
  int tau = 50;
  int ece_bins = 15;
  bool record_wall_time = true;
  std::uint64_t seed = 0;

  std::size_t iterations() const { return acquisition ? budget / acquisition : 0; }
  // Throws ConfigError for B not divisible by M, unknown strategy, etc.
  void validate() const;
};

// Disjoint labeled / unlabeled index sets over a fixed universe.
class PoolState {
 public:
  explicit PoolState(std::size_t universe_size);

  std::size_t universe_size() const { return is_labeled_.size(); }
  const std::vector<SampleId>& labeled() const { return labeled_; }
  // Ascending.
  std::vector<SampleId> unlabeled() const;
  std::size_t unlabeled_count() const { return universe_size() - labeled_.size(); }
  bool is_labeled(SampleId id) const { return is_labeled_.at(id); }
  std::size_t iteration() const { return history_.size(); }
  const std::vector<std::vector<SampleId>>& history() const { return history_; }

  // Moves ids from unlabeled to labeled as one acquisition round. Throws
  // ContractError on unknown or already-labeled ids.
  void acquire(std::span<const SampleId> ids);

  // Empty when the partition and history are consistent.
  std::vector<std::string> violations() const;

 private:
  std::vector<bool> is_labeled_;
  std::vector<SampleId> labeled_;
  std::vector<std::vector<SampleId>> history_;
};

// Simulated annotator backed by ground-truth labels.
class Oracle {
 public:
  explicit Oracle(const FeatureMatrix& universe);
  std::vector<int> label(std::span<const SampleId> ids) const;

 private:
  std::vector<int> truth_;
};

struct ShiftedSet {
  ShiftSpec spec;
  FeatureMatrix data;
};

struct EvaluationSets {
  FeatureMatrix test;
  std::optional<FeatureMatrix> ood;
  std::vector<ShiftedSet> shifted;
};

struct RunResult {
  std::vector<IterationReport> reports;
  PoolState pool{0};
  std::optional<Model> final_model;
  ClassPcaModel final_pca;
  Matrix bank_features;        // labeled feature bank of the last iteration
  std::vector<int> bank_labels;
  bool truncated = false;
};

using ReportObserver = std::function<void(const IterationReport&)>;

// Runs the acquire / train / evaluate cycle: M random picks, then for each
// iteration train a fresh model on D_L, evaluate, score a fresh random subset
// of the unlabeled pool with the strategy, and acquire M more. Emits one
// report per trained model (|D_L| = M, 2M, ..., B).
RunResult run_active_learning(const FeatureMatrix& universe, const EvaluationSets& eval, const LoopConfig& config,
                              const ModelConfig& model_config, const ReportObserver& observer = {});

// Bookkeeping audit of a finished run: pool partition, no repeated ids,
// |D_L^t| = t M, and per-class quota adherence for quota strategies.
std::vector<std::string> audit_run(const RunResult& run, const LoopConfig& config, int num_classes);

}  // namespace scal
