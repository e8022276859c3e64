#pragma once

#include <span>

#include "scal/types.hpp"

namespace scal {

// Supervised contrastive loss over a batch of unit-norm projections, summed
// over anchors:
//
//   L = sum_i -1/|P(i)| sum_{p in P(i)} log( exp(u_i.u_p / t) / sum_{n != i} exp(u_i.u_n / t) )
//
// P(i) holds every other row with the same label. Each anchor's log-sum-exp
// is stabilized by subtracting its max logit; anchors are accumulated in
// row order. Throws ContractError if some row has no positive.
double supcon_loss(const Matrix& unit_projections, std::span<const int> labels, double temperature);

// Same value; also writes dL/dU into `grad` (same shape as the input).
double supcon_loss_and_gradient(const Matrix& unit_projections, std::span<const int> labels,
                                double temperature, Matrix& grad);

}  // namespace scal
