#include "scal/feature_matrix.hpp"

#include <string>
#include <unordered_set>

#include "scal/errors.hpp"

namespace scal {

void FeatureMatrix::validate() const {
  const auto n = static_cast<std::size_t>(values.rows());
  if (ids.size() != n) {
    throw DataError("feature matrix has " + std::to_string(n) + " rows but " +
                    std::to_string(ids.size()) + " ids");
  }
  std::unordered_set<std::string> seen;
  seen.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen.insert(ids[i]).second) {
      throw DataError("duplicate sample id '" + ids[i] + "' at row " + std::to_string(i));
    }
    if (!values.row(static_cast<Index>(i)).allFinite()) {
      throw DataError("non-finite feature value at row " + std::to_string(i));
    }
  }
  if (labels) {
    if (labels->size() != n) throw DataError("label count does not match row count");
    for (std::size_t i = 0; i < n; ++i) {
      const int y = (*labels)[i];
      if (y < 0 || (num_classes > 0 && y >= num_classes)) {
        throw DataError("label " + std::to_string(y) + " out of range at row " + std::to_string(i));
      }
    }
  }
}

FeatureMatrix FeatureMatrix::subset(const std::vector<SampleId>& rows) const {
  FeatureMatrix out;
  out.num_classes = num_classes;
  out.values.resize(static_cast<Index>(rows.size()), values.cols());
  out.ids.reserve(rows.size());
  if (labels) out.labels.emplace().reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<Index>(rows[r]);
    out.values.row(static_cast<Index>(r)) = values.row(src);
    out.ids.push_back(ids[rows[r]]);
    if (labels) out.labels->push_back((*labels)[rows[r]]);
  }
  return out;
}

std::vector<std::size_t> class_histogram(const FeatureMatrix& data) {
  if (!data.labels) throw UsageError("class_histogram requires labels");
  int k = data.num_classes;
  for (int y : *data.labels) k = std::max(k, y + 1);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int y : *data.labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

}  // namespace scal
