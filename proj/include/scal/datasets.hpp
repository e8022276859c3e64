#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scal/feature_matrix.hpp"

namespace scal {

struct DatasetSpec {
  int num_classes = 10;
  int dim = 16;
  int n_per_class = 1000;  // size of the most frequent class
  double imbalance_ratio = 1.0;
  double class_separation = 3.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// n_k = round_half_up(n_0 * rho^(-k/(K-1))). Any difference between the sum
// of rounded sizes and the rounded sum of exact sizes goes to class 0.
std::vector<std::size_t> class_sizes(const DatasetSpec& spec);

// Isotropic Gaussian mixture with class k centered at separation * e_k.
// Rows are shuffled; ids are the decimal row positions.
FeatureMatrix generate_mixture(const DatasetSpec& spec);

// Unlabeled out-of-distribution samples: same noise, centered away from
// every class (on axis K when dim > K, else opposite the class centroid).
FeatureMatrix generate_ood(const DatasetSpec& spec, std::size_t count, std::uint64_t seed);

enum class ShiftKind { additive_gaussian, feature_scale, feature_dropout_mask, mean_drift };

inline constexpr std::array<ShiftKind, 4> kAllShiftKinds = {
    ShiftKind::additive_gaussian, ShiftKind::feature_scale, ShiftKind::feature_dropout_mask,
    ShiftKind::mean_drift};

std::string_view to_string(ShiftKind kind);
ShiftKind parse_shift_kind(std::string_view name);

struct ShiftSpec {
  ShiftKind kind = ShiftKind::additive_gaussian;
  int intensity = 1;  // 1..5
  // Replaces the scheduled magnitude when set.
  std::optional<double> magnitude_override;

  double magnitude() const;
};

// Scheduled magnitude for each intensity level, strictly increasing:
//   additive_gaussian     noise std
//   feature_scale         multiplicative factor applied to every row
//   feature_dropout_mask  probability of zeroing each element
//   mean_drift            length of a random translation shared by all rows
const std::array<double, 5>& shift_schedule(ShiftKind kind);

FeatureMatrix apply_shift(const FeatureMatrix& data, const ShiftSpec& shift, std::uint64_t seed);

}  // namespace scal
