#include "scal/supcon.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "scal/errors.hpp"

namespace scal {
namespace {

double evaluate(const Matrix& u, std::span<const int> labels, double temperature, Matrix* grad) {
  const Index n = u.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw ShapeError("supcon: label count does not match rows");
  if (!(temperature > 0.0)) throw ContractError("supcon: temperature must be positive");

  const Matrix logits = (u * u.transpose()) / temperature;
  // coeff(i, j) = dL/dlogit(i, j) for the anchor-i term.
  Matrix coeff;
  if (grad) coeff = Matrix::Zero(n, n);

  double total = 0.0;
  std::vector<double> soft(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::size_t positives = 0;
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      max_logit = std::max(max_logit, logits(i, j));
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) ++positives;
    }
    if (positives == 0) {
      throw ContractError("supcon: row " + std::to_string(i) + " has no positive in the batch");
    }
    double denom = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      soft[static_cast<std::size_t>(j)] = std::exp(logits(i, j) - max_logit);
      denom += soft[static_cast<std::size_t>(j)];
    }
    const double lse = max_logit + std::log(denom);
    double anchor = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i || labels[static_cast<std::size_t>(j)] != labels[static_cast<std::size_t>(i)]) continue;
      anchor += logits(i, j) - lse;
    }
    total += -anchor / static_cast<double>(positives);

    if (grad) {
      const double inv_pos = 1.0 / static_cast<double>(positives);
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        double c = soft[static_cast<std::size_t>(j)] / denom;
        if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) c -= inv_pos;
        coeff(i, j) = c;
      }
    }
  }
  if (grad) *grad = ((coeff + coeff.transpose()) * u) / temperature;
  return total;
}

}  // namespace

double supcon_loss(const Matrix& unit_projections, std::span<const int> labels, double temperature) {
  return evaluate(unit_projections, labels, temperature, nullptr);
}

double supcon_loss_and_gradient(const Matrix& unit_projections, std::span<const int> labels,
                                double temperature, Matrix& grad) {
  return evaluate(unit_projections, labels, temperature, &grad);
}

}  // namespace scal
