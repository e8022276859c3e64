#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "scal/checkpoint.hpp"
#include "scal/errors.hpp"
#include "scal/experiment.hpp"
#include "scal/feature_io.hpp"
#include "scal/metrics.hpp"
#include "scal/pca.hpp"
#include "scal/strategies.hpp"

namespace {

using scal::ExperimentConfig;

ExperimentConfig build_config(const std::string& config_path, const std::vector<std::string>& sets) {
  scal::FlatConfig flat;
  if (!config_path.empty()) flat = scal::load_flat_config(config_path);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw scal::ConfigError("--set expects key=value, got '" + s + "'");
    flat[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return ExperimentConfig::from_flat(flat);
}

scal::Vector score_rows(const scal::Checkpoint& ck, const std::string& strategy_name, const scal::Matrix& x, int tau,
                        std::uint64_t seed, std::vector<int>& predicted) {
  const auto& strategy = scal::strategy_by_name(strategy_name);
  const scal::Model& model = *ck.model;
  const scal::Matrix z = model.encode(x);
  const scal::Matrix probs = model.classify_features(z);
  predicted = scal::argmax_rows(probs);
  switch (strategy.kind) {
    case scal::StrategyKind::random: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      scal::Vector out(x.rows());
      for (auto& v : out) v = u(rng);
      return out;
    }
    case scal::StrategyKind::entropy:
      return scal::score_entropy(probs);
    case scal::StrategyKind::bald:
      return scal::score_bald(model.stochastic_proba(x, tau, model.config().dropout_rate, seed));
    case scal::StrategyKind::coreset: {
      if (ck.bank_features.rows() == 0) throw scal::DataError("checkpoint has no labeled feature bank");
      scal::Vector out(z.rows());
      for (scal::Index i = 0; i < z.rows(); ++i)
        out(i) = (ck.bank_features.rowwise() - z.row(i)).rowwise().norm().minCoeff();
      return out;
    }
    case scal::StrategyKind::featuresim:
      if (ck.bank_features.rows() == 0) throw scal::DataError("checkpoint has no labeled feature bank");
      return scal::score_featuresim(z, predicted, ck.bank_features, ck.bank_labels, model.num_classes(),
                                    scal::FeaturesimMode::symmetric);
    case scal::StrategyKind::fre:
      if (ck.pca.classes.empty()) throw scal::DataError("checkpoint has no class PCA model");
      return scal::fre_scores(ck.pca, z, predicted);
  }
  throw scal::ConfigError("unhandled strategy");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Active learning experiments with contrastive feature scoring"};
  app.require_subcommand(1);

  std::string config_path, out, strategy, format_name = "binary";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;

  auto* gen = app.add_subcommand("gen", "Write synthetic train/test/OOD feature files");
  gen->add_option("--config", config_path, "Flat key = value config file");
  gen->add_option("--set", sets, "Override a config key (key=value)");
  gen->add_option("--seed", seed, "Dataset seed");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--format", format_name, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));

  auto* run = app.add_subcommand("run", "Run every strategy x seed cell of a config");
  run->add_option("config", config_path, "Flat key = value config file");
  run->add_option("--set", sets, "Override a config key (key=value)");
  run->add_option("--seed", seed, "Run a single seed");
  run->add_option("--strategy", strategy, "Strategy name or comma list");
  run->add_option("--out", out, "Output directory");
  run->add_option("--jobs", jobs, "Worker threads");

  std::string run_dir;
  auto* report = app.add_subcommand("report", "Summarize a finished run directory");
  report->add_option("run_dir", run_dir, "Directory written by `run`")->required();

  std::string checkpoint_path, features_path;
  int tau = 50;
  auto* score = app.add_subcommand("score", "Score a feature file against a checkpoint");
  score->add_option("--checkpoint", checkpoint_path, "model.modl written by `run`")->required();
  score->add_option("--features", features_path, "Feature file (csv or binary)")->required();
  score->add_option("--strategy", strategy, "Scoring function (default: the checkpoint's)");
  score->add_option("--out", out, "CSV destination (default: stdout)");
  score->add_option("--seed", seed, "Seed for stochastic scorers");
  score->add_option("--tau", tau, "Dropout passes for bald");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*gen) {
    ExperimentConfig config = build_config(config_path, sets);
    if (seed) config.dataset.seed = *seed;
    scal::generate_files(config, out, scal::parse_feature_format(format_name));
    std::cout << "wrote " << out << '\n';
    return 0;
  }
  if (*run) {
    ExperimentConfig config = build_config(config_path, sets);
    if (seed) config.seeds = {*seed};
    if (!strategy.empty()) {
      config.strategies.clear();
      std::stringstream ss(strategy);
      for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) config.strategies.push_back(s);
    }
    if (!out.empty()) config.output_dir = out;
    if (jobs) config.jobs = *jobs;
    const auto outcome = scal::run_experiment(config, std::cout);
    std::cout << outcome.cells - outcome.failures << "/" << outcome.cells << " cells completed under "
              << config.output_dir.string() << '\n';
    return outcome.failures == 0 ? 0 : 4;
  }
  if (*report) {
    std::cout << scal::write_report(run_dir);
    return 0;
  }
  if (*score) {
    const scal::Checkpoint ck = scal::load_checkpoint(checkpoint_path);
    if (!ck.model) throw scal::DataError("checkpoint holds no model");
    const scal::FeatureMatrix features = scal::load_features(features_path);
    if (features.cols() != ck.model->config().d_in) {
      throw scal::DataError("feature file has " + std::to_string(features.cols()) + " columns, model expects " +
                            std::to_string(ck.model->config().d_in));
    }
    std::vector<int> predicted;
    const scal::Vector s =
        score_rows(ck, strategy.empty() ? ck.strategy : strategy, features.values, tau, seed.value_or(0), predicted);
    std::ofstream file;
    if (!out.empty()) {
      file.open(out);
      if (!file) throw scal::Error("cannot write '" + out + "'");
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os.precision(17);
    os << "id,predicted,score\n";
    for (scal::Index i = 0; i < s.size(); ++i)
      os << features.ids[static_cast<std::size_t>(i)] << ',' << predicted[static_cast<std::size_t>(i)] << ',' << s(i)
         << '\n';
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const scal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const scal::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
