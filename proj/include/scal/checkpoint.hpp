#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scal/model.hpp"
#include "scal/pca.hpp"

namespace scal {

// Everything needed to score new features offline.
struct Checkpoint {
  std::optional<Model> model;
  ClassPcaModel pca;       // empty when no PCA was fitted
  Matrix bank_features;    // labeled feature bank (may be empty)
  std::vector<int> bank_labels;
  std::string strategy;
};

// "MODL1" container: magic, u32-length JSON manifest (config echo and
// tensor list), u32 tensor count, then per tensor a length-prefixed name,
// u32 rows, u32 cols and rows*cols little-endian f64 in row-major order.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scal
