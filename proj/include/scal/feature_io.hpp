#pragma once

#include <filesystem>
#include <string_view>

#include "scal/feature_matrix.hpp"

namespace scal {

enum class FeatureFormat { csv, binary };

// ".csv" maps to csv; everything else to binary.
FeatureFormat format_for_path(const std::filesystem::path& path);
FeatureFormat parse_feature_format(std::string_view name);

// CSV: header id,label,f0..f{d-1}; empty label cells mark unlabeled rows.
// Binary: "ALCV1", u32 n, u32 d, u8 has_labels, n*d f32, [n u16 labels],
// n ids as u32 length + UTF-8 bytes. All integers little-endian.
void save_features(const FeatureMatrix& data, const std::filesystem::path& path, FeatureFormat format);
FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format);

inline void save_features(const FeatureMatrix& data, const std::filesystem::path& path) {
  save_features(data, path, format_for_path(path));
}
inline FeatureMatrix load_features(const std::filesystem::path& path) {
  return load_features(path, format_for_path(path));
}

}  // namespace scal
