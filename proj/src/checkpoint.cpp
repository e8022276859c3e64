#include "scal/checkpoint.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "binary_io.hpp"
#include "scal/errors.hpp"

namespace scal {
namespace {

using Json = nlohmann::ordered_json;
using TensorMap = std::map<std::string, Matrix>;

constexpr const char* kCheckpointMagic = "MODL1";

Json config_to_json(const ModelConfig& c) {
  return Json{{"d_in", c.d_in},
              {"d_hidden", c.d_hidden},
              {"d_feat", c.d_feat},
              {"d_proj", c.d_proj},
              {"temperature", c.temperature},
              {"lr", c.lr},
              {"momentum", c.momentum},
              {"weight_decay", c.weight_decay},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr_decay_epoch", c.lr_decay_epoch},
              {"aug_sigma", c.aug_sigma},
              {"dropout_rate", c.dropout_rate},
              {"train_dropout", c.train_dropout},
              {"classifier_steps", c.classifier_steps},
              {"classifier_lr", c.classifier_lr},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const Json& j) {
  ModelConfig c;
  c.d_in = j.at("d_in");
  c.d_hidden = j.at("d_hidden");
  c.d_feat = j.at("d_feat");
  c.d_proj = j.at("d_proj");
  c.temperature = j.at("temperature");
  c.lr = j.at("lr");
  c.momentum = j.at("momentum");
  c.weight_decay = j.at("weight_decay");
  c.epochs = j.at("epochs");
  c.batch_size = j.at("batch_size");
  c.lr_decay_epoch = j.at("lr_decay_epoch");
  c.aug_sigma = j.at("aug_sigma");
  c.dropout_rate = j.at("dropout_rate");
  c.train_dropout = j.at("train_dropout");
  c.classifier_steps = j.at("classifier_steps");
  c.classifier_lr = j.at("classifier_lr");
  c.seed = j.at("seed");
  return c;
}

Matrix row_of(const Vector& v) { return v.transpose(); }

const Matrix& need(const TensorMap& t, const std::string& name) {
  auto it = t.find(name);
  if (it == t.end()) throw DataError("checkpoint is missing tensor '" + name + "'");
  return it->second;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  TensorMap tensors;
  Json manifest;
  manifest["format"] = kCheckpointMagic;
  manifest["strategy"] = ck.strategy;
  if (ck.model) {
    const Model& m = *ck.model;
    manifest["model"] = Json{{"config", config_to_json(m.config())},
                             {"num_classes", m.num_classes()},
                             {"loss", std::string(to_string(m.trained_loss_kind()))},
                             {"classifier_fitted", m.classifier_fitted()}};
    const auto ts = m.weights().tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) tensors["model." + std::string(Weights::kNames[i])] = *ts[i];
  }
  if (!ck.pca.classes.empty()) {
    Json classes = Json::array();
    for (std::size_t k = 0; k < ck.pca.classes.size(); ++k) {
      const auto& c = ck.pca.classes[k];
      classes.push_back({{"fitted", c.fitted}, {"fit_count", c.fit_count}, {"retained", c.retained}});
      if (!c.fitted) continue;
      const std::string prefix = "pca." + std::to_string(k) + ".";
      tensors[prefix + "mean"] = row_of(c.mean);
      tensors[prefix + "basis"] = c.basis;
      tensors[prefix + "spectrum"] = row_of(c.spectrum);
    }
    manifest["pca"] = Json{{"centered", ck.pca.centered}, {"classes", classes}};
  }
  if (ck.bank_features.rows() > 0) {
    tensors["bank.features"] = ck.bank_features;
    Matrix labels(static_cast<Index>(ck.bank_labels.size()), 1);
    for (std::size_t i = 0; i < ck.bank_labels.size(); ++i) labels(static_cast<Index>(i), 0) = ck.bank_labels[i];
    tensors["bank.labels"] = labels;
  }
  Json listing = Json::array();
  for (const auto& [name, t] : tensors) listing.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  manifest["tensors"] = listing;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os.write(kCheckpointMagic, 5);
  detail::write_string(os, manifest.dump());
  detail::write_le(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    detail::write_string(os, name);
    detail::write_le(os, static_cast<std::uint32_t>(t.rows()));
    detail::write_le(os, static_cast<std::uint32_t>(t.cols()));
    for (Index i = 0; i < t.rows(); ++i)
      for (Index j = 0; j < t.cols(); ++j) detail::write_f64(os, t(i, j));
  }
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path.string() + "'");
  detail::expect_magic(is, kCheckpointMagic);
  Json manifest;
  try {
    manifest = Json::parse(detail::read_string(is));
  } catch (const Json::exception& e) {
    throw DataError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  TensorMap tensors;
  const auto count = detail::read_le<std::uint32_t>(is);
  for (std::uint32_t n = 0; n < count; ++n) {
    std::string name = detail::read_string(is);
    const auto rows = detail::read_le<std::uint32_t>(is);
    const auto cols = detail::read_le<std::uint32_t>(is);
    Matrix t(rows, cols);
    for (Index i = 0; i < t.rows(); ++i)
      for (Index j = 0; j < t.cols(); ++j) t(i, j) = detail::read_f64(is);
    tensors.emplace(std::move(name), std::move(t));
  }

  Checkpoint ck;
  try {
    ck.strategy = manifest.value("strategy", "");
    if (manifest.contains("model")) {
      const Json& mj = manifest.at("model");
      Model model(config_from_json(mj.at("config")), mj.at("num_classes").get<int>());
      auto ts = model.weights().tensors();
      for (std::size_t i = 0; i < ts.size(); ++i) {
        const Matrix& t = need(tensors, "model." + std::string(Weights::kNames[i]));
        if (t.rows() != ts[i]->rows() || t.cols() != ts[i]->cols()) {
          throw DataError("checkpoint tensor '" + std::string(Weights::kNames[i]) + "' has the wrong shape");
        }
        *ts[i] = t;
      }
      model.set_trained_loss_kind(parse_loss_kind(mj.at("loss").get<std::string>()));
      model.mark_classifier_fitted(mj.at("classifier_fitted").get<bool>());
      ck.model.emplace(std::move(model));
    }
    if (manifest.contains("pca")) {
      const Json& pj = manifest.at("pca");
      ck.pca.centered = pj.at("centered");
      for (std::size_t k = 0; k < pj.at("classes").size(); ++k) {
        const Json& cj = pj.at("classes")[k];
        ClassSubspace c;
        c.fitted = cj.at("fitted");
        c.fit_count = cj.at("fit_count");
        c.retained = cj.at("retained");
        if (c.fitted) {
          const std::string prefix = "pca." + std::to_string(k) + ".";
          c.mean = need(tensors, prefix + "mean").row(0).transpose();
          c.basis = need(tensors, prefix + "basis");
          const Matrix& s = need(tensors, prefix + "spectrum");
          c.spectrum = s.rows() ? Vector(s.row(0).transpose()) : Vector();
        }
        ck.pca.classes.push_back(std::move(c));
      }
    }
    if (tensors.count("bank.features")) {
      ck.bank_features = tensors.at("bank.features");
      const Matrix& labels = need(tensors, "bank.labels");
      for (Index i = 0; i < labels.rows(); ++i) ck.bank_labels.push_back(static_cast<int>(labels(i, 0)));
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  return ck;
}

}  // namespace scal
