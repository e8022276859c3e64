#pragma once

#include <optional>
#include <span>
#include <vector>

#include "scal/types.hpp"

namespace scal {

enum class PcaSolver {
  automatic,  // scatter when n_k > D, Gram otherwise
  scatter,    // D x D class scatter matrix
  gram,       // n_k x n_k Gram (snapshot) matrix
};

struct PcaOptions {
  // Exactly one of these selects the retained dimension; the variance
  // fraction is used when `components` is unset.
  std::optional<int> components;
  double variance_fraction = 0.95;
  bool center = true;
  PcaSolver solver = PcaSolver::automatic;
};

// Principal subspace of one class's features.
struct ClassSubspace {
  bool fitted = false;
  std::size_t fit_count = 0;
  Vector mean;           // zero when centering is disabled
  Eigen::MatrixXd basis;  // D x L, orthonormal columns
  Vector spectrum;       // all sample-covariance eigenvalues found, descending, >= 0
  Index retained = 0;    // L

  Vector eigenvalues() const { return spectrum.head(retained); }
  double discarded_variance() const { return spectrum.tail(spectrum.size() - retained).sum(); }
};

struct ClassPcaModel {
  std::vector<ClassSubspace> classes;
  bool centered = true;

  int num_classes() const { return static_cast<int>(classes.size()); }
  Index dim() const;
};

// Fits one subspace per class from rows of `features` with that label.
// Eigenvalues use the unbiased 1/(n_k - 1) covariance normalization.
// Classes with a single sample fall back to a mean-only model (L = 0) with a
// warning; classes without samples stay unfitted.
ClassPcaModel fit_class_pca(const Matrix& features, std::span<const int> labels, int num_classes,
                            const PcaOptions& options = {});

// Residual norm || (z - mu_k) - U_k U_k^T (z - mu_k) ||: the distance from z
// to the pre-image of its class-k principal embedding.
template <typename Derived>
double fre_score(const ClassPcaModel& model, const Eigen::MatrixBase<Derived>& z, int k);

// Scores every row of `features` against the class named by `predicted`.
Vector fre_scores(const ClassPcaModel& model, const Matrix& features, std::span<const int> predicted);

namespace detail {
const ClassSubspace& fitted_class(const ClassPcaModel& model, int k);
}

template <typename Derived>
double fre_score(const ClassPcaModel& model, const Eigen::MatrixBase<Derived>& z, int k) {
  const ClassSubspace& c = detail::fitted_class(model, k);
  const Vector centered = z.derived().template cast<double>().reshaped() - c.mean;
  if (c.retained == 0) return centered.norm();
  const Vector coeffs = c.basis.transpose() * centered;
  return (centered - c.basis * coeffs).norm();
}

}  // namespace scal
