#include "scal/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scal/errors.hpp"
#include "scal/log.hpp"

namespace scal {
namespace {

// Eigenpairs of a symmetric PSD matrix, sorted descending, tiny negative
// eigenvalues clamped to zero.
std::pair<Vector, Eigen::MatrixXd> descending_eigen(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");
  Vector values = solver.eigenvalues().reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  values = values.cwiseMax(0.0);
  return {values, vectors};
}

Index retained_dimension(const Vector& spectrum, const PcaOptions& options, Index cap) {
  const double top = spectrum.size() ? spectrum(0) : 0.0;
  Index rank = 0;
  while (rank < spectrum.size() && spectrum(rank) > 1e-12 * std::max(top, 1e-300) && spectrum(rank) > 0.0) ++rank;
  cap = std::min(cap, rank);
  if (options.components) return std::min<Index>(*options.components, cap);

  const double total = spectrum.sum();
  if (total <= 0.0) return 0;
  double prefix = 0.0;
  for (Index m = 0; m < cap; ++m) {
    prefix += spectrum(m);
    if (prefix >= options.variance_fraction * total * (1.0 - 1e-12)) return m + 1;
  }
  return cap;
}

ClassSubspace fit_one(const Eigen::MatrixXd& x, const PcaOptions& options) {
  ClassSubspace c;
  c.fitted = true;
  c.fit_count = static_cast<std::size_t>(x.rows());
  const Index n = x.rows();
  const Index d = x.cols();
  c.mean = options.center ? Vector(x.colwise().mean().transpose()) : Vector::Zero(d);
  if (n < 2) {
    c.spectrum.resize(0);
    c.basis.resize(d, 0);
    return c;
  }
  const Eigen::MatrixXd centered = x.rowwise() - c.mean.transpose();
  const double norm = 1.0 / static_cast<double>(n - 1);
  const Index cap = std::min<Index>(d, n - 1);

  PcaSolver solver = options.solver;
  if (solver == PcaSolver::automatic) solver = n > d ? PcaSolver::scatter : PcaSolver::gram;

  if (solver == PcaSolver::scatter) {
    auto [values, vectors] = descending_eigen(norm * centered.transpose() * centered);
    c.spectrum = values;
    c.retained = retained_dimension(c.spectrum, options, cap);
    c.basis = vectors.leftCols(c.retained);
  } else {
    auto [values, vectors] = descending_eigen(norm * centered * centered.transpose());
    c.spectrum = values;
    c.retained = retained_dimension(c.spectrum, options, cap);
    c.basis.resize(d, c.retained);
    for (Index m = 0; m < c.retained; ++m) {
      // u = X^T v / sqrt((n-1) lambda) maps a Gram eigenvector to a unit
      // scatter eigenvector with the same eigenvalue.
      c.basis.col(m) = centered.transpose() * vectors.col(m) / std::sqrt(values(m) / norm);
    }
  }
  return c;
}

}  // namespace

Index ClassPcaModel::dim() const {
  for (const auto& c : classes)
    if (c.fitted) return c.mean.size();
  return 0;
}

namespace detail {
const ClassSubspace& fitted_class(const ClassPcaModel& model, int k) {
  if (k < 0 || k >= model.num_classes() || !model.classes[static_cast<std::size_t>(k)].fitted) {
    throw LookupError("fre: class " + std::to_string(k) + " has no fitted PCA model");
  }
  return model.classes[static_cast<std::size_t>(k)];
}
}  // namespace detail

ClassPcaModel fit_class_pca(const Matrix& features, std::span<const int> labels, int num_classes,
                            const PcaOptions& options) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) throw ShapeError("fit_class_pca: label count mismatch");
  if (options.components && *options.components < 0) throw ConfigError("PCA components must be non-negative");
  if (!options.components && !(options.variance_fraction > 0.0 && options.variance_fraction <= 1.0)) {
    throw ConfigError("PCA variance fraction must lie in (0, 1]");
  }
  ClassPcaModel model;
  model.centered = options.center;
  model.classes.resize(static_cast<std::size_t>(num_classes));
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw ContractError("fit_class_pca: label out of range");
    rows[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
  }
  for (int k = 0; k < num_classes; ++k) {
    const auto& idx = rows[static_cast<std::size_t>(k)];
    if (idx.empty()) continue;
    if (idx.size() < 2) warn("fit_class_pca: class " + std::to_string(k) + " has one sample; using its mean only");
    Eigen::MatrixXd x(static_cast<Index>(idx.size()), features.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) x.row(static_cast<Index>(r)) = features.row(idx[r]);
    model.classes[static_cast<std::size_t>(k)] = fit_one(x, options);
  }
  return model;
}

Vector fre_scores(const ClassPcaModel& model, const Matrix& features, std::span<const int> predicted) {
  if (static_cast<std::size_t>(features.rows()) != predicted.size()) throw ShapeError("fre_scores: size mismatch");
  Vector out(features.rows());
  for (Index i = 0; i < features.rows(); ++i) out(i) = fre_score(model, features.row(i), predicted[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace scal
