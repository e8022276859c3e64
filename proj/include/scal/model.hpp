#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "scal/feature_matrix.hpp"
#include "scal/types.hpp"

namespace scal {

enum class LossKind { contrastive, cross_entropy };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct ModelConfig {
  int d_in = 16;
  int d_hidden = 64;
  int d_feat = 32;
  int d_proj = 16;
  double temperature = 0.07;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int epochs = 40;
  int batch_size = 64;
  // Learning rate is multiplied by 0.1 from this epoch on; < 0 disables.
  int lr_decay_epoch = 30;
  double aug_sigma = 0.05;
  double dropout_rate = 0.3;
  // Apply the hidden-layer dropout mask during training as well (MC dropout
  // models for BALD).
  bool train_dropout = false;
  int classifier_steps = 200;
  double classifier_lr = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// All trainable tensors. Weight matrices are (fan_in x fan_out) so that a
// layer is `rows * W + b`; biases are 1 x fan_out.
struct Weights {
  Matrix enc_w1, enc_b1, enc_w2, enc_b2;
  Matrix proj_w1, proj_b1, proj_w2, proj_b2;
  Matrix cls_w, cls_b;

  static constexpr std::array<std::string_view, 10> kNames = {
      "enc_w1", "enc_b1", "enc_w2", "enc_b2", "proj_w1", "proj_b1", "proj_w2", "proj_b2", "cls_w", "cls_b"};

  std::array<Matrix*, 10> tensors() {
    return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &proj_w1, &proj_b1, &proj_w2, &proj_b2, &cls_w, &cls_b};
  }
  std::array<const Matrix*, 10> tensors() const {
    return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &proj_w1, &proj_b1, &proj_w2, &proj_b2, &cls_w, &cls_b};
  }

  // Zero tensors with the same shapes.
  Weights zeros_like() const;
  bool all_finite() const;
};

// Monotone count of encoder forward batches. Copies snapshot the value.
class ForwardCounter {
 public:
  ForwardCounter() = default;
  ForwardCounter(const ForwardCounter& other) : count_(other.value()) {}
  ForwardCounter& operator=(const ForwardCounter& other) {
    count_.store(other.value());
    return *this;
  }
  std::uint64_t value() const { return count_.load(std::memory_order_acquire); }
  void add(std::uint64_t n) const { count_.fetch_add(n, std::memory_order_acq_rel); }

 private:
  mutable std::atomic<std::uint64_t> count_{0};
};

struct Projection {
  Matrix unit;                       // rows have unit L2 norm
  std::vector<Index> degenerate_rows;  // zero rows replaced by e_0
};

// Encoder (d_in -> tanh hidden -> d_feat), projection head used only by the
// contrastive objective, and a linear softmax classifier on the features.
class Model {
 public:
  Model(const ModelConfig& config, int num_classes);

  const ModelConfig& config() const { return config_; }
  int num_classes() const { return num_classes_; }
  Weights& weights() { return weights_; }
  const Weights& weights() const { return weights_; }

  // Pre-projection features. Adds ceil(n / batch_size) to the counter.
  Matrix encode(const Matrix& x) const;
  Projection project(const Matrix& features) const;

  // Requires a fitted classifier.
  Matrix predict_proba(const Matrix& x) const;
  // Class probabilities of already-encoded features; no encoder pass.
  Matrix classify_features(const Matrix& features) const;
  // tau passes with fresh Bernoulli masks (scaled by 1/(1-rate)) on the
  // hidden layer. Adds tau * ceil(n / batch_size) to the counter.
  std::vector<Matrix> stochastic_proba(const Matrix& x, int tau, double dropout_rate, std::uint64_t seed) const;

  std::uint64_t forward_passes() const { return counter_.value(); }
  std::uint64_t batches_for(Index n) const;

  bool classifier_fitted() const { return classifier_fitted_; }
  void mark_classifier_fitted(bool fitted = true) { classifier_fitted_ = fitted; }
  LossKind trained_loss_kind() const { return loss_kind_; }
  void set_trained_loss_kind(LossKind kind) { loss_kind_ = kind; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  std::vector<double>& loss_history() { return loss_history_; }

  void count_forward(std::uint64_t batches) const { counter_.add(batches); }

 private:
  ModelConfig config_;
  int num_classes_;
  Weights weights_;
  ForwardCounter counter_;
  bool classifier_fitted_ = false;
  LossKind loss_kind_ = LossKind::contrastive;
  std::vector<double> loss_history_;
};

// Contrastive objective of a batch of augmented views (rows of `views`) with
// the literal summed loss; gradients w.r.t. encoder and projection tensors
// are written into `grad` (classifier entries are zeroed). `hidden_mask`,
// when non-null, multiplies the hidden activations.
double contrastive_objective(const Model& model, const Matrix& views, std::span<const int> labels,
                             Weights& grad, const Matrix* hidden_mask = nullptr);

// Mean cross-entropy of encoder + classifier with gradients for both.
double cross_entropy_objective(const Model& model, const Matrix& x, std::span<const int> labels,
                               Weights& grad, const Matrix* hidden_mask = nullptr);

// Re-initializes nothing: trains `model` in place per `kind`. Contrastive
// mode runs SGD on encoder + projection, then fits the classifier by
// full-batch gradient descent on frozen features. Cross-entropy mode trains
// encoder + classifier jointly. Per-epoch mean losses are recorded.
void train(Model& model, const FeatureMatrix& labeled, LossKind kind);

// Full-batch softmax regression on frozen features (classifier only).
void fit_classifier(Model& model, const Matrix& features, std::span<const int> labels);

// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

}  // namespace scal
