#include "scal/feature_io.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "scal/errors.hpp"

namespace scal {
namespace {

constexpr const char* kFeatureMagic = "ALCV1";

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string row_context(std::size_t row) { return " (data row " + std::to_string(row) + ")"; }

void save_csv(const FeatureMatrix& data, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << "id,label";
  for (Index j = 0; j < data.cols(); ++j) os << ",f" << j;
  os << '\n';
  char buf[64];
  for (Index i = 0; i < data.rows(); ++i) {
    os << data.ids[static_cast<std::size_t>(i)] << ',';
    if (data.labels) os << (*data.labels)[static_cast<std::size_t>(i)];
    for (Index j = 0; j < data.cols(); ++j) {
      // Shortest representation that round-trips the double exactly.
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), data.values(i, j));
      os << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    os << '\n';
  }
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

FeatureMatrix load_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty CSV file '" + path.string() + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
    throw DataError("CSV header must start with id,label followed by feature columns");
  }
  const std::size_t d = header.size() - 2;

  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t labeled_rows = 0;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != d + 2) {
      throw DataError("expected " + std::to_string(d) + " features, found " +
                      std::to_string(cells.size() >= 2 ? cells.size() - 2 : 0) + row_context(row));
    }
    ids.emplace_back(cells[0]);
    if (cells[1].empty()) {
      labels.push_back(-1);
    } else {
      int y = 0;
      auto [p, ec] = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), y);
      if (ec != std::errc() || p != cells[1].data() + cells[1].size() || y < 0) {
        throw DataError("unparseable label '" + std::string(cells[1]) + "'" + row_context(row));
      }
      labels.push_back(y);
      ++labeled_rows;
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      const auto cell = cells[j + 2];
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size()) {
        throw DataError("unparseable feature '" + std::string(cell) + "'" + row_context(row));
      }
      values.push_back(v);
    }
    ++row;
  }

  FeatureMatrix out;
  out.values = Eigen::Map<const Matrix>(values.data(), static_cast<Index>(row), static_cast<Index>(d));
  out.ids = std::move(ids);
  if (labeled_rows == row && row > 0) {
    int k = 0;
    for (int y : labels) k = std::max(k, y + 1);
    out.num_classes = k;
    out.labels = std::move(labels);
  } else if (labeled_rows != 0) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0) throw DataError("missing label in partially labeled file" + row_context(i));
    }
  }
  out.validate();
  return out;
}

void save_binary(const FeatureMatrix& data, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os.write(kFeatureMagic, 5);
  detail::write_le(os, static_cast<std::uint32_t>(data.rows()));
  detail::write_le(os, static_cast<std::uint32_t>(data.cols()));
  detail::write_le(os, static_cast<std::uint8_t>(data.labels ? 1 : 0));
  for (Index i = 0; i < data.rows(); ++i)
    for (Index j = 0; j < data.cols(); ++j) detail::write_f32(os, static_cast<float>(data.values(i, j)));
  if (data.labels) {
    for (int y : *data.labels) {
      if (y < 0 || y > std::numeric_limits<std::uint16_t>::max()) throw DataError("label does not fit in u16");
      detail::write_le(os, static_cast<std::uint16_t>(y));
    }
  }
  for (const auto& id : data.ids) detail::write_string(os, id);
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

FeatureMatrix load_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  detail::expect_magic(is, kFeatureMagic);
  const auto n = detail::read_le<std::uint32_t>(is);
  const auto d = detail::read_le<std::uint32_t>(is);
  const auto has_labels = detail::read_le<std::uint8_t>(is);
  if (has_labels > 1) throw DataError("has_labels flag must be 0 or 1");

  FeatureMatrix out;
  out.values.resize(n, d);
  for (Index i = 0; i < out.values.rows(); ++i)
    for (Index j = 0; j < out.values.cols(); ++j) out.values(i, j) = detail::read_f32(is);
  if (has_labels) {
    out.labels.emplace(n);
    int k = 0;
    for (auto& y : *out.labels) {
      y = detail::read_le<std::uint16_t>(is);
      k = std::max(k, y + 1);
    }
    out.num_classes = k;
  }
  out.ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.ids.push_back(detail::read_string(is));
  out.validate();
  return out;
}

}  // namespace

FeatureFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FeatureFormat::csv : FeatureFormat::binary;
}

FeatureFormat parse_feature_format(std::string_view name) {
  if (name == "csv") return FeatureFormat::csv;
  if (name == "binary" || name == "bin") return FeatureFormat::binary;
  throw ConfigError("unknown feature format '" + std::string(name) + "' (valid: csv, binary)");
}

void save_features(const FeatureMatrix& data, const std::filesystem::path& path, FeatureFormat format) {
  data.validate();
  if (format == FeatureFormat::csv) {
    save_csv(data, path);
  } else {
    save_binary(data, path);
  }
}

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format) {
  return format == FeatureFormat::csv ? load_csv(path) : load_binary(path);
}

}  // namespace scal
