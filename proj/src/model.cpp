#include "scal/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "scal/errors.hpp"
#include "scal/log.hpp"
#include "scal/supcon.hpp"

namespace scal {
namespace {

Matrix uniform_init(Index rows, Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix out = x * w;
  out.rowwise() += b.row(0);
  return out;
}

Matrix column_sums(const Matrix& m) { return m.colwise().sum(); }

struct EncoderTrace {
  Matrix hidden_pre;
  Matrix hidden;  // tanh(pre), times the mask when one is given
  Matrix features;
};

EncoderTrace encoder_forward(const Weights& w, const Matrix& x, const Matrix* mask) {
  EncoderTrace t;
  t.hidden_pre = affine(x, w.enc_w1, w.enc_b1);
  t.hidden = t.hidden_pre.array().tanh().matrix();
  if (mask) t.hidden.array() *= mask->array();
  t.features = affine(t.hidden, w.enc_w2, w.enc_b2);
  return t;
}

// Accumulates encoder gradients given dL/dfeatures.
void encoder_backward(const Weights& w, const Matrix& x, const EncoderTrace& t, const Matrix& d_features,
                      const Matrix* mask, Weights& grad) {
  grad.enc_w2 = t.hidden.transpose() * d_features;
  grad.enc_b2 = column_sums(d_features);
  Matrix d_hidden = d_features * w.enc_w2.transpose();
  if (mask) d_hidden.array() *= mask->array();
  const Matrix d_pre = (d_hidden.array() * (1.0 - t.hidden_pre.array().tanh().square())).matrix();
  grad.enc_w1 = x.transpose() * d_pre;
  grad.enc_b1 = column_sums(d_pre);
}

Matrix dropout_mask(Index rows, Index cols, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = keep(rng) ? scale : 0.0;
  return m;
}

Matrix one_hot(std::span<const int> labels, int k) {
  Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i), labels[i]) = 1.0;
  return y;
}

double mean_cross_entropy(const Matrix& probs, std::span<const int> labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s -= std::log(std::max(probs(static_cast<Index>(i), labels[i]), 1e-300));
  }
  return labels.empty() ? 0.0 : s / static_cast<double>(labels.size());
}

// SGD with momentum and L2 weight decay on the tensors selected by `mask`.
class Sgd {
 public:
  Sgd(const Weights& like, double momentum, double weight_decay, std::array<bool, 10> active)
      : velocity_(like.zeros_like()), momentum_(momentum), weight_decay_(weight_decay), active_(active) {}

  void step(Weights& params, const Weights& grad, double lr) {
    auto p = params.tensors();
    auto g = grad.tensors();
    auto v = velocity_.tensors();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!active_[i]) continue;
      *v[i] = momentum_ * *v[i] + *g[i] + weight_decay_ * *p[i];
      *p[i] -= lr * *v[i];
    }
  }

 private:
  Weights velocity_;
  double momentum_;
  double weight_decay_;
  std::array<bool, 10> active_;
};

constexpr std::array<bool, 10> kEncoderAndProjection = {true, true, true, true, true, true, true, true, false, false};
constexpr std::array<bool, 10> kEncoderAndClassifier = {true, true, true, true, false, false, false, false, true, true};
constexpr std::array<bool, 10> kClassifierOnly = {false, false, false, false, false, false, false, false, true, true};

}  // namespace

std::string_view to_string(LossKind kind) {
  return kind == LossKind::contrastive ? "contrastive" : "cross_entropy";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "contrastive") return LossKind::contrastive;
  if (name == "cross_entropy") return LossKind::cross_entropy;
  throw ConfigError("unknown loss kind '" + std::string(name) + "' (valid: contrastive, cross_entropy)");
}

void ModelConfig::validate() const {
  if (d_in < 1 || d_hidden < 1 || d_feat < 1 || d_proj < 1) throw ConfigError("model dimensions must be positive");
  if (d_proj > d_feat) throw ConfigError("d_proj must not exceed d_feat");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 0 || classifier_steps < 0) throw ConfigError("epoch and step counts must be non-negative");
  if (!(lr > 0.0) || !(classifier_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0 || aug_sigma < 0.0) throw ConfigError("weight_decay and aug_sigma must be non-negative");
}

Weights Weights::zeros_like() const {
  Weights z;
  auto dst = z.tensors();
  auto src = tensors();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = Matrix::Zero(src[i]->rows(), src[i]->cols());
  return z;
}

bool Weights::all_finite() const {
  for (const Matrix* t : tensors())
    if (!t->allFinite()) return false;
  return true;
}

Model::Model(const ModelConfig& config, int num_classes) : config_(config), num_classes_(num_classes) {
  config_.validate();
  if (num_classes < 2) throw ConfigError("model needs at least 2 classes");
  std::mt19937_64 rng(mix_seed(config_.seed, 0x1417));
  auto layer = [&](Matrix& w, Matrix& b, int fan_in, int fan_out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    w = uniform_init(fan_in, fan_out, bound, rng);
    b = uniform_init(1, fan_out, bound, rng);
  };
  layer(weights_.enc_w1, weights_.enc_b1, config_.d_in, config_.d_hidden);
  layer(weights_.enc_w2, weights_.enc_b2, config_.d_hidden, config_.d_feat);
  layer(weights_.proj_w1, weights_.proj_b1, config_.d_feat, config_.d_feat);
  layer(weights_.proj_w2, weights_.proj_b2, config_.d_feat, config_.d_proj);
  layer(weights_.cls_w, weights_.cls_b, config_.d_feat, num_classes);
}

std::uint64_t Model::batches_for(Index n) const {
  const auto b = static_cast<std::uint64_t>(config_.batch_size);
  return (static_cast<std::uint64_t>(n) + b - 1) / b;
}

Matrix Model::encode(const Matrix& x) const {
  if (x.cols() != config_.d_in) {
    throw ShapeError("encode: expected " + std::to_string(config_.d_in) + " input columns, got " +
                     std::to_string(x.cols()));
  }
  counter_.add(batches_for(x.rows()));
  return encoder_forward(weights_, x, nullptr).features;
}

Projection Model::project(const Matrix& features) const {
  if (features.cols() != config_.d_feat) throw ShapeError("project: feature dimension mismatch");
  Projection out;
  const Matrix hidden = affine(features, weights_.proj_w1, weights_.proj_b1).array().tanh().matrix();
  out.unit = affine(hidden, weights_.proj_w2, weights_.proj_b2);
  for (Index i = 0; i < out.unit.rows(); ++i) {
    const double norm = out.unit.row(i).norm();
    if (norm > 0.0) {
      out.unit.row(i) /= norm;
    } else {
      out.unit.row(i).setZero();
      out.unit(i, 0) = 1.0;
      out.degenerate_rows.push_back(i);
    }
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Matrix Model::predict_proba(const Matrix& x) const {
  if (!classifier_fitted_) throw UsageError("predict_proba: classifier has not been fitted");
  return softmax_rows(affine(encode(x), weights_.cls_w, weights_.cls_b));
}

Matrix Model::classify_features(const Matrix& features) const {
  if (!classifier_fitted_) throw UsageError("classify_features: classifier has not been fitted");
  if (features.cols() != config_.d_feat) throw ShapeError("classify_features: feature dimension mismatch");
  return softmax_rows(affine(features, weights_.cls_w, weights_.cls_b));
}

std::vector<Matrix> Model::stochastic_proba(const Matrix& x, int tau, double dropout_rate,
                                            std::uint64_t seed) const {
  if (tau < 2) throw UsageError("stochastic_proba: tau must be at least 2");
  if (!classifier_fitted_) throw UsageError("stochastic_proba: classifier has not been fitted");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (x.cols() != config_.d_in) throw ShapeError("stochastic_proba: input dimension mismatch");
  if (dropout_rate == 0.0) warn("stochastic_proba: dropout rate 0 makes every pass identical");

  std::vector<Matrix> slices;
  slices.reserve(static_cast<std::size_t>(tau));
  std::mt19937_64 rng(seed);
  for (int t = 0; t < tau; ++t) {
    const Matrix mask = dropout_mask(x.rows(), config_.d_hidden, dropout_rate, rng);
    counter_.add(batches_for(x.rows()));
    const EncoderTrace trace = encoder_forward(weights_, x, &mask);
    slices.push_back(softmax_rows(affine(trace.features, weights_.cls_w, weights_.cls_b)));
  }
  return slices;
}

double contrastive_objective(const Model& model, const Matrix& views, std::span<const int> labels,
                             Weights& grad, const Matrix* hidden_mask) {
  const Weights& w = model.weights();
  grad = w.zeros_like();
  const EncoderTrace enc = encoder_forward(w, views, hidden_mask);

  const Matrix proj_pre = affine(enc.features, w.proj_w1, w.proj_b1);
  const Matrix proj_hidden = proj_pre.array().tanh().matrix();
  const Matrix raw = affine(proj_hidden, w.proj_w2, w.proj_b2);
  Matrix unit = raw;
  Vector norms(raw.rows());
  for (Index i = 0; i < raw.rows(); ++i) {
    norms(i) = raw.row(i).norm();
    if (norms(i) > 0.0) {
      unit.row(i) /= norms(i);
    } else {
      unit.row(i).setZero();
      unit(i, 0) = 1.0;
    }
  }

  Matrix d_unit;
  const double loss = supcon_loss_and_gradient(unit, labels, model.config().temperature, d_unit);

  // Through u = p / ||p||: dp = (du - u (u . du)) / ||p||.
  Matrix d_raw = Matrix::Zero(raw.rows(), raw.cols());
  for (Index i = 0; i < raw.rows(); ++i) {
    if (norms(i) == 0.0) continue;
    d_raw.row(i) = (d_unit.row(i) - unit.row(i) * unit.row(i).dot(d_unit.row(i))) / norms(i);
  }
  grad.proj_w2 = proj_hidden.transpose() * d_raw;
  grad.proj_b2 = column_sums(d_raw);
  const Matrix d_proj_pre =
      ((d_raw * w.proj_w2.transpose()).array() * (1.0 - proj_hidden.array().square())).matrix();
  grad.proj_w1 = enc.features.transpose() * d_proj_pre;
  grad.proj_b1 = column_sums(d_proj_pre);
  const Matrix d_features = d_proj_pre * w.proj_w1.transpose();
  encoder_backward(w, views, enc, d_features, hidden_mask, grad);
  return loss;
}

double cross_entropy_objective(const Model& model, const Matrix& x, std::span<const int> labels,
                               Weights& grad, const Matrix* hidden_mask) {
  const Weights& w = model.weights();
  grad = w.zeros_like();
  const EncoderTrace enc = encoder_forward(w, x, hidden_mask);
  const Matrix probs = softmax_rows(affine(enc.features, w.cls_w, w.cls_b));
  const double loss = mean_cross_entropy(probs, labels);
  const Matrix d_logits = (probs - one_hot(labels, model.num_classes())) / static_cast<double>(x.rows());
  grad.cls_w = enc.features.transpose() * d_logits;
  grad.cls_b = column_sums(d_logits);
  encoder_backward(w, x, enc, d_logits * w.cls_w.transpose(), hidden_mask, grad);
  return loss;
}

void fit_classifier(Model& model, const Matrix& features, std::span<const int> labels) {
  const ModelConfig& cfg = model.config();
  Weights& w = model.weights();
  const Index n = features.rows();
  if (n == 0) throw ContractError("fit_classifier: no labeled samples");
  // Softmax regression is (mean ||z||^2 / 2)-smooth, so scale the step by
  // that curvature bound to stay stable for any feature scale.
  const double curvature = features.rowwise().squaredNorm().mean() + 1.0;
  const double lr = cfg.classifier_lr / curvature;
  const Matrix targets = one_hot(labels, model.num_classes());
  Weights grad = w.zeros_like();
  Sgd opt(w, cfg.momentum, cfg.weight_decay, kClassifierOnly);
  for (int step = 0; step < cfg.classifier_steps; ++step) {
    const Matrix probs = softmax_rows(affine(features, w.cls_w, w.cls_b));
    const Matrix d_logits = (probs - targets) / static_cast<double>(n);
    grad.cls_w = features.transpose() * d_logits;
    grad.cls_b = column_sums(d_logits);
    opt.step(w, grad, lr);
  }
  model.loss_history().push_back(
      mean_cross_entropy(softmax_rows(affine(features, w.cls_w, w.cls_b)), labels));
  model.mark_classifier_fitted();
}

void train(Model& model, const FeatureMatrix& labeled, LossKind kind) {
  const ModelConfig& cfg = model.config();
  if (!labeled.labels) throw UsageError("train: labeled data required");
  if (labeled.cols() != cfg.d_in) throw ShapeError("train: input dimension mismatch");
  const auto& y = *labeled.labels;
  const Index n = labeled.rows();
  if (n == 0) throw ContractError("train: empty labeled set");
  for (int label : y) {
    if (label < 0 || label >= model.num_classes()) throw ContractError("train: label out of range");
  }

  if (kind == LossKind::contrastive) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(model.num_classes()), 0);
    for (int label : y) ++counts[static_cast<std::size_t>(label)];
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] == 1) {
        warn("train: class " + std::to_string(k) +
             " has a single labeled sample; its two augmented views are its only positives");
      }
    }
  }

  model.set_trained_loss_kind(kind);
  model.loss_history().clear();
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x7a11));
  std::normal_distribution<double> jitter(0.0, cfg.aug_sigma);
  Sgd opt(model.weights(), cfg.momentum, cfg.weight_decay,
          kind == LossKind::contrastive ? kEncoderAndProjection : kEncoderAndClassifier);
  Weights grad = model.weights().zeros_like();

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = (cfg.lr_decay_epoch >= 0 && epoch >= cfg.lr_decay_epoch) ? 0.1 * cfg.lr : cfg.lr;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t b = std::min(batch, order.size() - start);
      const std::size_t views_per_sample = kind == LossKind::contrastive ? 2 : 1;
      Matrix views(static_cast<Index>(b * views_per_sample), cfg.d_in);
      std::vector<int> view_labels(b * views_per_sample);
      for (std::size_t r = 0; r < b; ++r) {
        const auto src = static_cast<Index>(order[start + r]);
        for (std::size_t v = 0; v < views_per_sample; ++v) {
          const auto row = static_cast<Index>(r * views_per_sample + v);
          for (Index j = 0; j < cfg.d_in; ++j) views(row, j) = labeled.values(src, j) + jitter(rng);
          view_labels[static_cast<std::size_t>(row)] = y[order[start + r]];
        }
      }
      Matrix mask;
      const Matrix* mask_ptr = nullptr;
      if (cfg.train_dropout && cfg.dropout_rate > 0.0) {
        mask = dropout_mask(views.rows(), cfg.d_hidden, cfg.dropout_rate, rng);
        mask_ptr = &mask;
      }
      model.count_forward(1);
      double loss = 0.0;
      if (kind == LossKind::contrastive) {
        // Optimize the per-view mean so the step size is batch-size free.
        loss = contrastive_objective(model, views, view_labels, grad, mask_ptr) / static_cast<double>(views.rows());
        for (Matrix* g : grad.tensors()) *g /= static_cast<double>(views.rows());
      } else {
        loss = cross_entropy_objective(model, views, view_labels, grad, mask_ptr);
      }
      opt.step(model.weights(), grad, lr);
      if (!model.weights().all_finite()) {
        throw Error("train: non-finite weights at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss;
      ++batches;
    }
    model.loss_history().push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
  }

  if (kind == LossKind::contrastive || cfg.epochs == 0) {
    fit_classifier(model, model.encode(labeled.values), y);
  } else {
    model.mark_classifier_fitted();
  }
}

}  // namespace scal
