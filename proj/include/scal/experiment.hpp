#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scal/datasets.hpp"
#include "scal/feature_io.hpp"
#include "scal/loop.hpp"
#include "scal/model.hpp"

namespace scal {

// Flat `section.key = value` text config. '#' starts a comment.
using FlatConfig = std::map<std::string, std::string>;

FlatConfig parse_flat_config(const std::string& text);
FlatConfig load_flat_config(const std::filesystem::path& path);
std::string format_flat_config(const FlatConfig& config);

struct ExperimentConfig {
  // Synthetic data, used when no train file is given.
  DatasetSpec dataset;
  std::size_t test_per_class = 200;
  std::size_t ood_count = 1000;
  std::optional<std::filesystem::path> train_path, test_path, ood_path;

  ModelConfig model;
  LoopConfig loop;
  std::vector<ShiftSpec> shifts;
  std::vector<std::string> strategies = {"featuresim", "fre", "random"};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::filesystem::path output_dir = "scal_run";
  int jobs = 1;

  // Desk-scale long-tailed preset (K = 10, rho = 50, M = 100, T = 10).
  static ExperimentConfig desk_preset();

  // Every key is echoed, so from_flat(to_flat()) reproduces the config.
  FlatConfig to_flat() const;
  // Unknown keys and unparsable values raise ConfigError.
  static ExperimentConfig from_flat(const FlatConfig& flat);

  // Checks value ranges, strategy names and that referenced files exist.
  void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct PreparedData {
  FeatureMatrix train;
  EvaluationSets eval;
};

// Synthetic or file-backed pool, test set, OOD set and the shifted copies
// of the test set.
PreparedData prepare_data(const ExperimentConfig& config);

// Writes train/test/ood feature files for the synthetic spec.
void generate_files(const ExperimentConfig& config, const std::filesystem::path& out_dir, FeatureFormat format);

// One strategy x seed cell, streaming reports to <dir>/iterations.jsonl and
// writing manifest.json and model.modl.
RunResult run_cell(const ExperimentConfig& config, const PreparedData& data, const std::string& strategy,
                   std::uint64_t seed, const std::filesystem::path& dir);

struct ExperimentOutcome {
  std::size_t cells = 0;
  std::size_t failures = 0;
};

// Runs every strategy x seed cell under output_dir, then writes curves.csv.
ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

// Reports of every completed cell under run_dir, keyed by strategy, one
// vector per seed.
std::map<std::string, std::vector<std::vector<IterationReport>>> collect_reports(const std::filesystem::path& run_dir);

// curves.csv: strategy,iteration,labeled_count,metric,mean,std,n.
void write_curves(const std::filesystem::path& run_dir);

// Final-iteration summary table plus per-strategy learning curves under
// <run_dir>/report/. Returns the summary as text.
std::string write_report(const std::filesystem::path& run_dir);

}  // namespace scal
