#include "scal/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "scal/model.hpp"

namespace scal {

double auroc(std::span<const double> scores_in, std::span<const double> scores_out) {
  if (scores_in.empty() || scores_out.empty()) throw ContractError("auroc: both score sets must be non-empty");
  struct Entry {
    double score;
    bool out;
  };
  std::vector<Entry> all;
  all.reserve(scores_in.size() + scores_out.size());
  for (double s : scores_in) all.push_back({s, false});
  for (double s : scores_out) all.push_back({s, true});
  for (const auto& e : all)
    if (std::isnan(e.score)) throw ContractError("auroc: NaN score");
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Twice the U statistic, kept integral so the result is exact.
  unsigned long long twice_u = 0;
  unsigned long long in_below = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    unsigned long long in_tie = 0, out_tie = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].out ? out_tie : in_tie) += 1;
      ++j;
    }
    twice_u += 2 * out_tie * in_below + out_tie * in_tie;
    in_below += in_tie;
    i = j;
  }
  const double pairs = static_cast<double>(scores_in.size()) * static_cast<double>(scores_out.size());
  return static_cast<double>(twice_u) / (2.0 * pairs);
}

double sampling_bias(std::span<const std::size_t> class_counts) {
  if (class_counts.size() < 2) throw ContractError("sampling_bias: needs at least 2 classes");
  const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  if (total == 0) throw ContractError("sampling_bias: no acquired samples");
  double h = 0.0;
  for (std::size_t c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  const double bias = 1.0 - h / std::log(static_cast<double>(class_counts.size()));
  return std::clamp(bias, 0.0, 1.0);
}

double mce(std::span<const ShiftCell> cells) {
  if (cells.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : cells) total += 1.0 - c.accuracy;
  return total / static_cast<double>(cells.size());
}

CostSnapshot snapshot(const Model& model) {
  return {model.forward_passes(), std::chrono::steady_clock::now()};
}

QueryCost query_cost(const CostSnapshot& before, const CostSnapshot& after) {
  if (after.forward_passes < before.forward_passes) throw ContractError("query_cost: counter went backwards");
  return {after.forward_passes - before.forward_passes,
          std::chrono::duration<double, std::milli>(after.time - before.time).count()};
}

double IterationReport::shifted_error() const { return scal::mce(shifts); }

double IterationReport::shifted_ece() const {
  if (shifts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : shifts) total += c.ece;
  return total / static_cast<double>(shifts.size());
}

std::string IterationReport::to_jsonl() const {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  j["labeled_count"] = labeled_count;
  j["accuracy"] = accuracy;
  j["ece"] = ece;
  j["nll"] = nll;
  j["brier"] = brier;
  j["sampling_bias"] = sampling_bias;
  j["auroc_ood"] = auroc_ood ? nlohmann::ordered_json(*auroc_ood) : nlohmann::ordered_json(nullptr);
  j["mce"] = mce;
  j["mce_normalization"] = "none";
  auto& table = j["shifts"] = nlohmann::ordered_json::array();
  for (const auto& c : shifts) {
    table.push_back({{"kind", c.kind}, {"intensity", c.intensity}, {"accuracy", c.accuracy}, {"ece", c.ece}});
  }
  j["query_wall_ms"] = query_wall_ms;
  j["forward_passes_used"] = forward_passes_used;
  j["strategy"] = strategy;
  j["seed"] = seed;
  j["acquired_count"] = acquired_count;
  j["deficit_fills"] = deficit_fills;
  j["truncated"] = truncated;
  j["class_counts"] = class_counts;
  j["acquired_predicted_hist"] = acquired_predicted_hist;
  return j.dump();
}

IterationReport IterationReport::from_jsonl(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    IterationReport r;
    r.iteration = j.at("iteration").get<int>();
    r.labeled_count = j.at("labeled_count").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.ece = j.at("ece").get<double>();
    r.nll = j.at("nll").get<double>();
    r.brier = j.at("brier").get<double>();
    r.sampling_bias = j.at("sampling_bias").get<double>();
    if (!j.at("auroc_ood").is_null()) r.auroc_ood = j.at("auroc_ood").get<double>();
    r.mce = j.at("mce").get<double>();
    for (const auto& c : j.at("shifts")) {
      r.shifts.push_back({c.at("kind").get<std::string>(), c.at("intensity").get<int>(),
                          c.at("accuracy").get<double>(), c.at("ece").get<double>()});
    }
    r.query_wall_ms = j.at("query_wall_ms").get<double>();
    r.forward_passes_used = j.at("forward_passes_used").get<std::uint64_t>();
    r.strategy = j.value("strategy", "");
    r.seed = j.value("seed", std::uint64_t{0});
    r.acquired_count = j.value("acquired_count", std::size_t{0});
    r.deficit_fills = j.value("deficit_fills", std::size_t{0});
    r.truncated = j.value("truncated", false);
    r.class_counts = j.value("class_counts", std::vector<std::size_t>{});
    r.acquired_predicted_hist = j.value("acquired_predicted_hist", std::vector<std::size_t>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed iteration report: ") + e.what());
  }
}

}  // namespace scal
