#include "scal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "scal/checkpoint.hpp"
#include "scal/errors.hpp"
#include "scal/feature_io.hpp"

namespace scal {
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last) throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
Field number_field(std::string key, std::function<T&(ExperimentConfig&)> ref) {
  return Field{key,
               [ref](const ExperimentConfig& c) {
                 T v = ref(const_cast<ExperimentConfig&>(c));
                 if constexpr (std::is_floating_point_v<T>) {
                   return fmt_double(v);
                 } else {
                   return std::to_string(v);
                 }
               },
               [key, ref](ExperimentConfig& c, const std::string& v) { ref(c) = parse_number<T>(key, v); }};
}

Field bool_field(std::string key, std::function<bool&(ExperimentConfig&)> ref) {
  return Field{key, [ref](const ExperimentConfig& c) { return std::string(ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
               [key, ref](ExperimentConfig& c, const std::string& v) { ref(c) = parse_bool(key, v); }};
}

Field path_field(std::string key, std::function<std::optional<fs::path>&(ExperimentConfig&)> ref) {
  return Field{key,
               [ref](const ExperimentConfig& c) {
                 const auto& p = ref(const_cast<ExperimentConfig&>(c));
                 return p ? p->string() : std::string();
               },
               [ref](ExperimentConfig& c, const std::string& v) {
                 if (v.empty()) {
                   ref(c).reset();
                 } else {
                   ref(c) = fs::path(v);
                 }
               }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      number_field<int>("data.classes", [](C& c) -> int& { return c.dataset.num_classes; }),
      number_field<int>("data.dim", [](C& c) -> int& { return c.dataset.dim; }),
      number_field<int>("data.n_per_class", [](C& c) -> int& { return c.dataset.n_per_class; }),
      number_field<double>("data.imbalance_ratio", [](C& c) -> double& { return c.dataset.imbalance_ratio; }),
      number_field<double>("data.separation", [](C& c) -> double& { return c.dataset.class_separation; }),
      number_field<double>("data.noise", [](C& c) -> double& { return c.dataset.noise_sigma; }),
      number_field<std::uint64_t>("data.seed", [](C& c) -> std::uint64_t& { return c.dataset.seed; }),
      number_field<std::size_t>("data.test_per_class", [](C& c) -> std::size_t& { return c.test_per_class; }),
      number_field<std::size_t>("data.ood_count", [](C& c) -> std::size_t& { return c.ood_count; }),
      path_field("data.train", [](C& c) -> std::optional<fs::path>& { return c.train_path; }),
      path_field("data.test", [](C& c) -> std::optional<fs::path>& { return c.test_path; }),
      path_field("data.ood", [](C& c) -> std::optional<fs::path>& { return c.ood_path; }),

      number_field<int>("model.d_hidden", [](C& c) -> int& { return c.model.d_hidden; }),
      number_field<int>("model.d_feat", [](C& c) -> int& { return c.model.d_feat; }),
      number_field<int>("model.d_proj", [](C& c) -> int& { return c.model.d_proj; }),
      number_field<double>("model.temperature", [](C& c) -> double& { return c.model.temperature; }),
      number_field<double>("model.lr", [](C& c) -> double& { return c.model.lr; }),
      number_field<double>("model.momentum", [](C& c) -> double& { return c.model.momentum; }),
      number_field<double>("model.weight_decay", [](C& c) -> double& { return c.model.weight_decay; }),
      number_field<int>("model.epochs", [](C& c) -> int& { return c.model.epochs; }),
      number_field<int>("model.batch_size", [](C& c) -> int& { return c.model.batch_size; }),
      number_field<int>("model.lr_decay_epoch", [](C& c) -> int& { return c.model.lr_decay_epoch; }),
      number_field<double>("model.aug_sigma", [](C& c) -> double& { return c.model.aug_sigma; }),
      number_field<double>("model.dropout_rate", [](C& c) -> double& { return c.model.dropout_rate; }),
      number_field<int>("model.classifier_steps", [](C& c) -> int& { return c.model.classifier_steps; }),
      number_field<double>("model.classifier_lr", [](C& c) -> double& { return c.model.classifier_lr; }),

      number_field<std::size_t>("loop.B", [](C& c) -> std::size_t& { return c.loop.budget; }),
      number_field<std::size_t>("loop.M", [](C& c) -> std::size_t& { return c.loop.acquisition; }),
      number_field<std::size_t>("loop.subset_size", [](C& c) -> std::size_t& { return c.loop.subset_size; }),
      number_field<int>("loop.tau", [](C& c) -> int& { return c.loop.tau; }),
      number_field<int>("loop.ece_bins", [](C& c) -> int& { return c.loop.ece_bins; }),
      Field{"loop.loss",
            [](const C& c) { return c.loop.loss ? std::string(to_string(*c.loop.loss)) : std::string("auto"); },
            [](C& c, const std::string& v) {
              if (v == "auto") {
                c.loop.loss.reset();
              } else {
                c.loop.loss = parse_loss_kind(v);
              }
            }},
      Field{"loop.per_class",
            [](const C& c) { return c.loop.per_class ? std::string(*c.loop.per_class ? "on" : "off") : std::string("auto"); },
            [](C& c, const std::string& v) {
              if (v == "auto") {
                c.loop.per_class.reset();
              } else {
                c.loop.per_class = parse_bool("loop.per_class", v);
              }
            }},
      Field{"loop.feature_cache", [](const C& c) { return std::string(to_string(c.loop.feature_cache)); },
            [](C& c, const std::string& v) { c.loop.feature_cache = parse_feature_cache_mode(v); }},
      Field{"loop.featuresim",
            [](const C& c) { return std::string(c.loop.featuresim_mode == FeaturesimMode::literal ? "literal" : "symmetric"); },
            [](C& c, const std::string& v) {
              if (v == "literal") {
                c.loop.featuresim_mode = FeaturesimMode::literal;
              } else if (v == "symmetric") {
                c.loop.featuresim_mode = FeaturesimMode::symmetric;
              } else {
                throw ConfigError("loop.featuresim must be literal or symmetric");
              }
            }},
      bool_field("loop.record_wall_time", [](C& c) -> bool& { return c.loop.record_wall_time; }),

      Field{"pca.components",
            [](const C& c) { return c.loop.pca.components ? std::to_string(*c.loop.pca.components) : std::string("auto"); },
            [](C& c, const std::string& v) {
              if (v == "auto") {
                c.loop.pca.components.reset();
              } else {
                c.loop.pca.components = parse_number<int>("pca.components", v);
              }
            }},
      number_field<double>("pca.variance", [](C& c) -> double& { return c.loop.pca.variance_fraction; }),
      bool_field("pca.center", [](C& c) -> bool& { return c.loop.pca.center; }),

      Field{"shifts.suite",
            [](const C& c) {
              std::vector<std::string> items;
              for (const auto& s : c.shifts) items.push_back(std::string(to_string(s.kind)) + ":" + std::to_string(s.intensity));
              return join(items);
            },
            [](C& c, const std::string& v) {
              c.shifts.clear();
              for (const auto& item : split_list(v)) {
                const auto colon = item.find(':');
                if (colon == std::string::npos) throw ConfigError("shifts.suite entries look like kind:level");
                ShiftSpec s;
                s.kind = parse_shift_kind(item.substr(0, colon));
                s.intensity = parse_number<int>("shifts.suite", item.substr(colon + 1));
                s.magnitude();  // validates the level
                c.shifts.push_back(s);
              }
            }},

      Field{"run.strategies", [](const C& c) { return join(c.strategies); },
            [](C& c, const std::string& v) { c.strategies = split_list(v); }},
      Field{"run.seeds",
            [](const C& c) {
              std::vector<std::string> items;
              for (auto s : c.seeds) items.push_back(std::to_string(s));
              return join(items);
            },
            [](C& c, const std::string& v) {
              c.seeds.clear();
              for (const auto& item : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>("run.seeds", item));
            }},
      Field{"run.out", [](const C& c) { return c.output_dir.string(); },
            [](C& c, const std::string& v) { c.output_dir = v; }},
      number_field<int>("run.jobs", [](C& c) -> int& { return c.jobs; }),
  };
  return table;
}

std::vector<ShiftSpec> full_shift_suite() {
  std::vector<ShiftSpec> out;
  for (ShiftKind k : kAllShiftKinds)
    for (int level = 1; level <= 5; ++level) out.push_back(ShiftSpec{k, level, std::nullopt});
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  os << text;
}

struct MetricDef {
  const char* name;
  std::function<std::optional<double>(const IterationReport&)> get;
};

const std::vector<MetricDef>& curve_metrics() {
  static const std::vector<MetricDef> defs = {
      {"accuracy", [](const IterationReport& r) { return std::optional<double>(r.accuracy); }},
      {"ece", [](const IterationReport& r) { return std::optional<double>(r.ece); }},
      {"nll", [](const IterationReport& r) { return std::optional<double>(r.nll); }},
      {"brier", [](const IterationReport& r) { return std::optional<double>(r.brier); }},
      {"sampling_bias", [](const IterationReport& r) { return std::optional<double>(r.sampling_bias); }},
      {"auroc_ood", [](const IterationReport& r) { return r.auroc_ood; }},
      {"mce", [](const IterationReport& r) { return std::optional<double>(r.mce); }},
      {"shifted_ece", [](const IterationReport& r) { return std::optional<double>(r.shifted_ece()); }},
      {"query_wall_ms", [](const IterationReport& r) { return std::optional<double>(r.query_wall_ms); }},
      {"forward_passes_used",
       [](const IterationReport& r) { return std::optional<double>(static_cast<double>(r.forward_passes_used)); }},
  };
  return defs;
}

// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

// Values of `metric` across seeds at iteration index t.
std::vector<double> gather(const std::vector<std::vector<IterationReport>>& seeds, std::size_t t, const MetricDef& metric,
                           std::size_t* labeled_count) {
  std::vector<double> out;
  for (const auto& run : seeds) {
    if (t >= run.size()) continue;
    if (labeled_count) *labeled_count = run[t].labeled_count;
    if (auto v = metric.get(run[t])) out.push_back(*v);
  }
  return out;
}

}  // namespace

FlatConfig parse_flat_config(const std::string& text) {
  FlatConfig out;
  std::stringstream ss(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
    out[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

FlatConfig load_flat_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_flat_config(ss.str());
}

std::string format_flat_config(const FlatConfig& config) {
  std::string out;
  for (const auto& [k, v] : config) out += k + " = " + v + "\n";
  return out;
}

ExperimentConfig ExperimentConfig::desk_preset() {
  ExperimentConfig c;
  c.dataset.num_classes = 10;
  c.dataset.dim = 16;
  c.dataset.n_per_class = 1000;
  c.dataset.imbalance_ratio = 50.0;
  c.dataset.class_separation = 3.0;
  c.dataset.noise_sigma = 1.0;
  c.dataset.seed = 2024;
  c.test_per_class = 200;
  c.ood_count = 1000;
  c.loop.budget = 1000;
  c.loop.acquisition = 100;
  c.loop.subset_size = 2000;
  c.shifts = full_shift_suite();
  return c;
}

FlatConfig ExperimentConfig::to_flat() const {
  FlatConfig out;
  for (const auto& f : fields()) out[f.key] = f.get(*this);
  return out;
}

ExperimentConfig ExperimentConfig::from_flat(const FlatConfig& flat) {
  ExperimentConfig c = desk_preset();
  for (const auto& [key, value] : flat) {
    auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return f.key == key; });
    if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(c, value);
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (!train_path) dataset.validate();
  if (train_path && !test_path) throw ConfigError("data.test is required when data.train is given");
  for (const auto* p : {&train_path, &test_path, &ood_path}) {
    if (*p && !fs::exists(**p)) throw ConfigError("referenced file '" + (*p)->string() + "' does not exist");
  }
  ModelConfig m = model;
  m.d_in = train_path ? 1 : dataset.dim;
  m.validate();
  for (const auto& s : strategies) {
    LoopConfig l = loop;
    l.strategy = s;
    l.validate();
  }
  if (strategies.empty()) throw ConfigError("run.strategies must name at least one strategy");
  if (seeds.empty()) throw ConfigError("run.seeds must not be empty");
  if (jobs < 1) throw ConfigError("run.jobs must be positive");
  if (!train_path && test_per_class == 0) throw ConfigError("data.test_per_class must be positive");
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return ExperimentConfig::from_flat(load_flat_config(path));
}

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData out;
  if (config.train_path) {
    out.train = load_features(*config.train_path);
    out.eval.test = load_features(*config.test_path);
    if (config.ood_path) out.eval.ood = load_features(*config.ood_path);
    if (!out.train.labels) throw DataError("training pool needs ground-truth labels for the simulated oracle");
    if (!out.eval.test.labels) throw DataError("test set must be labeled");
    if (out.train.cols() != out.eval.test.cols()) throw DataError("train and test feature dimensions differ");
    if (out.eval.ood && out.eval.ood->cols() != out.train.cols()) throw DataError("OOD feature dimension differs");
    const int k = std::max(out.train.num_classes, out.eval.test.num_classes);
    out.train.num_classes = out.eval.test.num_classes = k;
  } else {
    out.train = generate_mixture(config.dataset);
    DatasetSpec test_spec = config.dataset;
    test_spec.imbalance_ratio = 1.0;
    test_spec.n_per_class = static_cast<int>(config.test_per_class);
    test_spec.seed = mix_seed(config.dataset.seed, 1);
    out.eval.test = generate_mixture(test_spec);
    if (config.ood_count > 0) out.eval.ood = generate_ood(config.dataset, config.ood_count, mix_seed(config.dataset.seed, 2));
  }
  for (const auto& shift : config.shifts) {
    const auto seed = mix_seed(config.dataset.seed, 100 + 10 * static_cast<std::uint64_t>(shift.kind) +
                                                        static_cast<std::uint64_t>(shift.intensity));
    out.eval.shifted.push_back({shift, apply_shift(out.eval.test, shift, seed)});
  }
  return out;
}

void generate_files(const ExperimentConfig& config, const fs::path& out_dir, FeatureFormat format) {
  ExperimentConfig synthetic = config;
  synthetic.train_path.reset();
  synthetic.shifts.clear();
  synthetic.dataset.validate();
  const PreparedData data = prepare_data(synthetic);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create '" + out_dir.string() + "': " + ec.message());
  const std::string ext = format == FeatureFormat::csv ? ".csv" : ".bin";
  save_features(data.train, out_dir / ("train" + ext), format);
  save_features(data.eval.test, out_dir / ("test" + ext), format);
  if (data.eval.ood) save_features(*data.eval.ood, out_dir / ("ood" + ext), format);
}

RunResult run_cell(const ExperimentConfig& config, const PreparedData& data, const std::string& strategy,
                   std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  LoopConfig loop = config.loop;
  loop.strategy = strategy;
  loop.seed = seed;

  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["strategy"] = strategy;
  manifest["seed"] = seed;
  manifest["config"] = config.to_flat();
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  std::ofstream jsonl(dir / "iterations.jsonl", std::ios::binary | std::ios::trunc);
  if (!jsonl) throw Error("cannot write '" + (dir / "iterations.jsonl").string() + "'");
  RunResult run = run_active_learning(data.train, data.eval, loop, config.model, [&](const IterationReport& r) {
    jsonl << r.to_jsonl() << '\n';
    jsonl.flush();
  });

  Checkpoint ck;
  ck.model = run.final_model;
  ck.pca = run.final_pca;
  ck.bank_features = run.bank_features;
  ck.bank_labels = run.bank_labels;
  ck.strategy = strategy;
  save_checkpoint(ck, dir / "model.modl");
  return run;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const PreparedData data = prepare_data(config);
  fs::create_directories(config.output_dir);

  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["strategies"] = config.strategies;
  manifest["seeds"] = config.seeds;
  manifest["config"] = config.to_flat();
  write_text(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(config.output_dir / "config.txt", format_flat_config(config.to_flat()));

  struct Cell {
    std::string strategy;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& s : config.strategies)
    for (auto seed : config.seeds) cells.push_back({s, seed});

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failures{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& cell = cells[i];
      const fs::path dir = config.output_dir / cell.strategy / ("seed_" + std::to_string(cell.seed));
      try {
        const RunResult run = run_cell(config, data, cell.strategy, cell.seed, dir);
        std::lock_guard lock(log_mutex);
        const auto& last = run.reports.back();
        log << cell.strategy << " seed " << cell.seed << ": " << run.reports.size() << " iterations, final accuracy "
            << last.accuracy << ", sampling bias " << last.sampling_bias << '\n';
      } catch (const std::exception& e) {
        ++failures;
        write_text(dir / "FAILED", std::string(e.what()) + "\n");
        std::lock_guard lock(log_mutex);
        log << cell.strategy << " seed " << cell.seed << " FAILED: " << e.what() << '\n';
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::min<int>(config.jobs, static_cast<int>(cells.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  write_curves(config.output_dir);
  return {cells.size(), failures.load()};
}

std::map<std::string, std::vector<std::vector<IterationReport>>> collect_reports(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw DataError("run directory '" + run_dir.string() + "' does not exist");
  std::map<std::string, std::vector<std::vector<IterationReport>>> out;
  std::vector<fs::path> strategy_dirs;
  for (const auto& entry : fs::directory_iterator(run_dir))
    if (entry.is_directory() && entry.path().filename() != "report") strategy_dirs.push_back(entry.path());
  std::sort(strategy_dirs.begin(), strategy_dirs.end());
  for (const auto& sdir : strategy_dirs) {
    std::vector<fs::path> seed_dirs;
    for (const auto& entry : fs::directory_iterator(sdir))
      if (entry.is_directory() && fs::exists(entry.path() / "iterations.jsonl") && !fs::exists(entry.path() / "FAILED")) {
        seed_dirs.push_back(entry.path());
      }
    std::sort(seed_dirs.begin(), seed_dirs.end());
    for (const auto& d : seed_dirs) {
      std::ifstream is(d / "iterations.jsonl");
      std::vector<IterationReport> reports;
      std::string line;
      while (std::getline(is, line))
        if (!line.empty()) reports.push_back(IterationReport::from_jsonl(line));
      out[sdir.filename().string()].push_back(std::move(reports));
    }
  }
  if (out.empty()) throw DataError("no completed runs under '" + run_dir.string() + "'");
  return out;
}

void write_curves(const fs::path& run_dir) {
  const auto all = collect_reports(run_dir);
  std::ostringstream os;
  os << "strategy,iteration,labeled_count,metric,mean,std,n\n";
  for (const auto& [strategy, seeds] : all) {
    std::size_t T = 0;
    for (const auto& run : seeds) T = std::max(T, run.size());
    for (std::size_t t = 0; t < T; ++t) {
      for (const auto& metric : curve_metrics()) {
        std::size_t labeled = 0;
        const auto values = gather(seeds, t, metric, &labeled);
        if (values.empty()) continue;
        const auto [mean, sd] = mean_std(values);
        os << strategy << ',' << t + 1 << ',' << labeled << ',' << metric.name << ',' << fmt_double(mean) << ','
           << fmt_double(sd) << ',' << values.size() << '\n';
      }
    }
  }
  write_text(run_dir / "curves.csv", os.str());
}

std::string write_report(const fs::path& run_dir) {
  const auto all = collect_reports(run_dir);
  const fs::path out_dir = run_dir / "report";
  fs::create_directories(out_dir);

  std::ostringstream summary;
  summary << "strategy,n_seeds,iteration,labeled_count";
  for (const auto& m : curve_metrics()) summary << ',' << m.name << "_mean," << m.name << "_std";
  summary << '\n';

  std::ostringstream table;
  table << "strategy      seeds  |D_L|   accuracy        ece             mce             shifted_ece     auroc_ood\n";
  for (const auto& [strategy, seeds] : all) {
    std::size_t T = 0;
    for (const auto& run : seeds) T = std::max(T, run.size());

    std::ostringstream curve;
    curve << "iteration,labeled_count";
    for (const auto& m : curve_metrics()) curve << ',' << m.name << "_mean," << m.name << "_std";
    curve << '\n';
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t labeled = 0;
      std::ostringstream cells;
      for (const auto& m : curve_metrics()) {
        const auto values = gather(seeds, t, m, &labeled);
        if (values.empty()) {
          cells << ",,";
          continue;
        }
        const auto [mean, sd] = mean_std(values);
        cells << ',' << fmt_double(mean) << ',' << fmt_double(sd);
      }
      curve << t + 1 << ',' << labeled << cells.str() << '\n';
      if (t + 1 == T) summary << strategy << ',' << seeds.size() << ',' << T << ',' << labeled << cells.str() << '\n';
    }
    write_text(out_dir / ("curve_" + strategy + ".csv"), curve.str());

    char line[256];
    auto stat = [&](const char* name) {
      const auto& defs = curve_metrics();
      const auto it = std::find_if(defs.begin(), defs.end(), [&](const MetricDef& d) { return std::string(d.name) == name; });
      return mean_std(gather(seeds, T - 1, *it, nullptr));
    };
    const auto acc = stat("accuracy"), e = stat("ece"), m = stat("mce"), se = stat("shifted_ece"), au = stat("auroc_ood");
    std::size_t labeled = 0;
    gather(seeds, T - 1, curve_metrics()[0], &labeled);
    std::snprintf(line, sizeof(line),
                  "%-13s %5zu  %5zu   %.4f+-%.4f  %.4f+-%.4f  %.4f+-%.4f  %.4f+-%.4f  %.4f+-%.4f\n", strategy.c_str(),
                  seeds.size(), labeled, acc.first, acc.second, e.first, e.second, m.first, m.second, se.first,
                  se.second, au.first, au.second);
    table << line;
  }
  write_text(out_dir / "summary.csv", summary.str());
  write_text(out_dir / "summary.txt", table.str());
  return table.str();
}

}  // namespace scal
