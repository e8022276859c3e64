#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scal/errors.hpp"
#include "scal/types.hpp"

namespace scal {

class Model;

namespace detail {

template <typename Derived>
void check_probability_rows(const Eigen::MatrixBase<Derived>& probs, double tol, const char* who) {
  for (Index i = 0; i < probs.rows(); ++i) {
    const double s = probs.row(i).sum();
    if (!(std::abs(s - 1.0) <= tol) || (probs.row(i).array() < -tol).any()) {
      throw ContractError(std::string(who) + ": row " + std::to_string(i) + " is not a probability vector");
    }
  }
}

template <typename Derived>
void check_labels(const Eigen::MatrixBase<Derived>& probs, std::span<const int> labels, const char* who) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw ShapeError(std::string(who) + ": label count does not match rows");
  }
  if (labels.empty()) throw ContractError(std::string(who) + ": undefined for zero samples");
  for (int y : labels) {
    if (y < 0 || y >= probs.cols()) throw ContractError(std::string(who) + ": label out of range");
  }
}

}  // namespace detail

// Index of the largest entry of each row (first on ties).
template <typename Derived>
std::vector<int> argmax_rows(const Eigen::MatrixBase<Derived>& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Index i = 0; i < probs.rows(); ++i) {
    Index k = 0;
    probs.row(i).maxCoeff(&k);
    out[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return out;
}

template <typename Derived>
double accuracy(const Eigen::MatrixBase<Derived>& probs, std::span<const int> labels) {
  detail::check_labels(probs, labels, "accuracy");
  const auto pred = argmax_rows(probs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// Expected calibration error over equal-width bins of the top-class
// confidence; bin b covers [b/B, (b+1)/B), with confidence 1 in the last bin.
template <typename Derived>
double ece(const Eigen::MatrixBase<Derived>& probs, std::span<const int> labels, int bins = 15) {
  detail::check_labels(probs, labels, "ece");
  detail::check_probability_rows(probs, 1e-6, "ece");
  if (bins < 1) throw ConfigError("ece: bin count must be positive");
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> hit_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
  for (Index i = 0; i < probs.rows(); ++i) {
    Index k = 0;
    const double conf = probs.row(i).maxCoeff(&k);
    auto b = static_cast<int>(std::floor(conf * bins));
    b = std::clamp(b, 0, bins - 1);
    conf_sum[static_cast<std::size_t>(b)] += conf;
    hit_sum[static_cast<std::size_t>(b)] += (k == labels[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
    ++count[static_cast<std::size_t>(b)];
  }
  const auto n = static_cast<double>(probs.rows());
  double total = 0.0;
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 0) continue;
    total += std::abs(hit_sum[b] - conf_sum[b]) / n;  // (n_b/n) |acc_b - conf_b|
  }
  return total;
}

template <typename Derived>
double brier(const Eigen::MatrixBase<Derived>& probs, std::span<const int> labels) {
  detail::check_labels(probs, labels, "brier");
  double total = 0.0;
  for (Index i = 0; i < probs.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    for (Index k = 0; k < probs.cols(); ++k) {
      const double diff = probs(i, k) - (k == y ? 1.0 : 0.0);
      total += diff * diff;
    }
  }
  return total / static_cast<double>(probs.rows());
}

// Mean of -ln p_y with p_y clamped below at 1e-12.
template <typename Derived>
double nll(const Eigen::MatrixBase<Derived>& probs, std::span<const int> labels) {
  detail::check_labels(probs, labels, "nll");
  double total = 0.0;
  for (Index i = 0; i < probs.rows(); ++i) {
    total -= std::log(std::max<double>(probs(i, labels[static_cast<std::size_t>(i)]), 1e-12));
  }
  return total / static_cast<double>(probs.rows());
}

// Probability that a random out-of-distribution score exceeds a random
// in-distribution score, ties counted half (Mann-Whitney U / (n_in n_out)).
double auroc(std::span<const double> scores_in, std::span<const double> scores_out);

// 1 - H(counts) / ln K with K = counts.size(), natural logs.
double sampling_bias(std::span<const std::size_t> class_counts);

struct ShiftCell {
  std::string kind;
  int intensity = 0;
  double accuracy = 0.0;
  double ece = 0.0;
};

// Unnormalized mean classification error over shift cells.
double mce(std::span<const ShiftCell> cells);

struct CostSnapshot {
  std::uint64_t forward_passes = 0;
  std::chrono::steady_clock::time_point time;
};

struct QueryCost {
  std::uint64_t forward_passes = 0;
  double wall_ms = 0.0;
};

CostSnapshot snapshot(const Model& model);
QueryCost query_cost(const CostSnapshot& before, const CostSnapshot& after);

struct IterationReport {
  int iteration = 0;
  std::size_t labeled_count = 0;
  double accuracy = 0.0;
  double ece = 0.0;
  double nll = 0.0;
  double brier = 0.0;
  double sampling_bias = 0.0;
  std::optional<double> auroc_ood;
  double mce = 0.0;
  std::vector<ShiftCell> shifts;
  double query_wall_ms = 0.0;
  std::uint64_t forward_passes_used = 0;

  // Bookkeeping for audits of the acquisition step.
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t acquired_count = 0;
  std::size_t deficit_fills = 0;
  bool truncated = false;
  std::vector<std::size_t> class_counts;           // true labels of D_L
  std::vector<std::size_t> acquired_predicted_hist;  // predicted class of this batch

  // Mean error / ECE over the shift cells.
  double shifted_error() const;
  double shifted_ece() const;

  // One JSON object on a single line.
  std::string to_jsonl() const;
  static IterationReport from_jsonl(const std::string& line);
};

}  // namespace scal
