#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scal/types.hpp"

namespace scal {

// Dense n x d feature table with per-row ids and optional class labels.
struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> ids;
  std::optional<std::vector<int>> labels;
  // Number of classes the labels are drawn from; 0 when unknown.
  int num_classes = 0;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool labeled() const { return labels.has_value(); }

  // Throws DataError when ids repeat, labels are out of range, sizes
  // disagree, or any value is non-finite.
  void validate() const;

  // Copy of the listed rows, in the given order.
  FeatureMatrix subset(const std::vector<SampleId>& rows) const;
};

// Per-class sample counts of a labeled matrix, sized num_classes.
std::vector<std::size_t> class_histogram(const FeatureMatrix& data);

}  // namespace scal
