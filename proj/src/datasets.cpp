#include "scal/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "scal/errors.hpp"

namespace scal {
namespace {

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

FeatureMatrix gaussian_block(const std::vector<std::size_t>& sizes, const Matrix& centers,
                             double sigma, std::mt19937_64& rng) {
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const Index d = centers.cols();
  std::normal_distribution<double> normal(0.0, sigma);

  FeatureMatrix out;
  out.values.resize(static_cast<Index>(total), d);
  out.labels.emplace();
  out.labels->reserve(total);
  Index row = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (std::size_t i = 0; i < sizes[k]; ++i, ++row) {
      for (Index j = 0; j < d; ++j) out.values(row, j) = centers(static_cast<Index>(k), j) + normal(rng);
      out.labels->push_back(static_cast<int>(k));
    }
  }

  std::vector<SampleId> order(total);
  std::iota(order.begin(), order.end(), SampleId{0});
  std::shuffle(order.begin(), order.end(), rng);
  FeatureMatrix shuffled;
  shuffled.values.resize(out.values.rows(), d);
  shuffled.labels.emplace(total);
  shuffled.ids.reserve(total);
  for (std::size_t r = 0; r < total; ++r) {
    shuffled.values.row(static_cast<Index>(r)) = out.values.row(static_cast<Index>(order[r]));
    (*shuffled.labels)[r] = (*out.labels)[order[r]];
    shuffled.ids.push_back(std::to_string(r));
  }
  return shuffled;
}

}  // namespace

void DatasetSpec::validate() const {
  if (num_classes < 2) throw ConfigError("dataset needs at least 2 classes");
  if (dim < 2) throw ConfigError("dataset dimension must be at least 2");
  if (dim < num_classes) throw ConfigError("dataset dimension must be >= class count (centers lie on axes)");
  if (!(imbalance_ratio >= 1.0)) throw ConfigError("imbalance ratio must be >= 1");
  if (n_per_class < 1) throw ConfigError("n_per_class must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
}

std::vector<std::size_t> class_sizes(const DatasetSpec& spec) {
  spec.validate();
  const int K = spec.num_classes;
  std::vector<std::size_t> sizes(static_cast<std::size_t>(K));
  double exact_total = 0.0;
  std::size_t rounded_total = 0;
  for (int k = 0; k < K; ++k) {
    const double exact = spec.n_per_class * std::pow(spec.imbalance_ratio, -static_cast<double>(k) / (K - 1));
    sizes[static_cast<std::size_t>(k)] = round_half_up(exact);
    exact_total += exact;
    rounded_total += sizes[static_cast<std::size_t>(k)];
  }
  const auto target = static_cast<long long>(round_half_up(exact_total));
  const long long adjust = target - static_cast<long long>(rounded_total);
  sizes[0] = static_cast<std::size_t>(static_cast<long long>(sizes[0]) + adjust);
  return sizes;
}

FeatureMatrix generate_mixture(const DatasetSpec& spec) {
  const auto sizes = class_sizes(spec);
  Matrix centers = Matrix::Zero(spec.num_classes, spec.dim);
  for (int k = 0; k < spec.num_classes; ++k) centers(k, k) = spec.class_separation;

  std::mt19937_64 rng(spec.seed);
  FeatureMatrix out = gaussian_block(sizes, centers, spec.noise_sigma, rng);
  out.num_classes = spec.num_classes;
  return out;
}

FeatureMatrix generate_ood(const DatasetSpec& spec, std::size_t count, std::uint64_t seed) {
  spec.validate();
  Matrix center = Matrix::Zero(1, spec.dim);
  if (spec.dim > spec.num_classes) {
    center(0, spec.num_classes) = spec.class_separation;
  } else {
    center.leftCols(spec.num_classes).setConstant(-spec.class_separation / std::sqrt(spec.num_classes));
  }
  std::mt19937_64 rng(seed);
  FeatureMatrix out = gaussian_block({count}, center, spec.noise_sigma, rng);
  out.labels.reset();
  return out;
}

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::additive_gaussian: return "additive_gaussian";
    case ShiftKind::feature_scale: return "feature_scale";
    case ShiftKind::feature_dropout_mask: return "feature_dropout_mask";
    case ShiftKind::mean_drift: return "mean_drift";
  }
  return "unknown";
}

ShiftKind parse_shift_kind(std::string_view name) {
  for (ShiftKind k : kAllShiftKinds) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown shift kind '" + std::string(name) +
                    "' (valid: additive_gaussian, feature_scale, feature_dropout_mask, mean_drift)");
}

const std::array<double, 5>& shift_schedule(ShiftKind kind) {
  static constexpr std::array<double, 5> additive = {0.25, 0.5, 1.0, 1.5, 2.0};
  static constexpr std::array<double, 5> scale = {1.25, 1.5, 2.0, 2.5, 3.0};
  static constexpr std::array<double, 5> dropout = {0.05, 0.1, 0.2, 0.3, 0.45};
  static constexpr std::array<double, 5> drift = {0.5, 1.0, 1.5, 2.0, 3.0};
  switch (kind) {
    case ShiftKind::additive_gaussian: return additive;
    case ShiftKind::feature_scale: return scale;
    case ShiftKind::feature_dropout_mask: return dropout;
    case ShiftKind::mean_drift: return drift;
  }
  throw ConfigError("unknown shift kind");
}

double ShiftSpec::magnitude() const {
  if (intensity < 1 || intensity > 5) {
    throw ConfigError("shift intensity must be in 1..5, got " + std::to_string(intensity));
  }
  if (magnitude_override) return *magnitude_override;
  return shift_schedule(kind)[static_cast<std::size_t>(intensity - 1)];
}

FeatureMatrix apply_shift(const FeatureMatrix& data, const ShiftSpec& shift, std::uint64_t seed) {
  const double m = shift.magnitude();
  FeatureMatrix out = data;
  std::mt19937_64 rng(seed);
  Matrix& x = out.values;
  switch (shift.kind) {
    case ShiftKind::additive_gaussian: {
      if (m == 0.0) break;
      std::normal_distribution<double> normal(0.0, m);
      for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j) x(i, j) += normal(rng);
      break;
    }
    case ShiftKind::feature_scale:
      x *= m;
      break;
    case ShiftKind::feature_dropout_mask: {
      if (m < 0.0 || m > 1.0) throw ConfigError("feature_dropout_mask magnitude must be a probability");
      std::bernoulli_distribution drop(m);
      for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j)
          if (drop(rng)) x(i, j) = 0.0;
      break;
    }
    case ShiftKind::mean_drift: {
      std::normal_distribution<double> normal(0.0, 1.0);
      RowVector direction(x.cols());
      for (Index j = 0; j < x.cols(); ++j) direction(j) = normal(rng);
      direction.normalize();
      x.rowwise() += m * direction;
      break;
    }
  }
  return out;
}

}  // namespace scal
