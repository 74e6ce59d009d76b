#include "autonilm/harness/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "autonilm/error.hpp"
#include "autonilm/harness/metrics.hpp"

namespace autonilm {

void rank_results(std::vector<MethodResult>& results) {
  std::stable_sort(results.begin(), results.end(), [](const MethodResult& a, const MethodResult& b) {
    if (a.average_mae != b.average_mae) return a.average_mae < b.average_mae;
    return to_string(a.method) < to_string(b.method);
  });
}

BenchmarkReport run_benchmark(std::shared_ptr<const TimeSeriesDataset> data, const BenchmarkOptions& options) {
  if (options.methods.empty()) throw ConfigError("no methods to benchmark");
  for (Method m : options.methods)
    if (is_external(m))
      throw ConfigError("method " + std::string(to_string(m)) + " cannot be benchmarked without a native trainer");
  if (data->appliances.empty()) throw DataError("dataset has no appliances");

  const SearchSpace full = builtin_space();
  const Objective objective = objective_for_all(data, options.split, options.harness);
  const std::size_t train_end = options.split.train_end(*data);
  const TimeRange train{0, train_end};
  const TimeRange test{train_end, data->size()};
  const auto names = data->appliance_names();

  BenchmarkReport report;
  for (Method m : options.methods) {
    const auto start = std::chrono::steady_clock::now();
    const Method only[] = {m};
    const RunResult search = run_optimization(objective, full.restricted(only), options.tpe, options.budget, options.run);

    MethodResult r;
    r.method = m;
    r.config = search.best.config;
    r.validation_loss = *search.best.loss;
    const Predictions p = fit_and_predict(*data, r.config, names, train, test, options.harness);
    std::vector<std::vector<double>> truths;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& v = data->appliance(names[i]).values;
      truths.emplace_back(v.begin() + static_cast<std::ptrdiff_t>(test.begin), v.end());
      r.appliance_mae.push_back(mae(p.values[i], truths.back()));
    }
    r.appliances = names;
    double total = 0.0;
    for (double e : r.appliance_mae) total += e;
    r.average_mae = total / static_cast<double>(names.size());
    const std::vector<double> mains(data->mains.begin() + static_cast<std::ptrdiff_t>(test.begin), data->mains.end());
    r.accuracy = disaggregation_accuracy(p.values, truths, mains);
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.results.push_back(std::move(r));
  }
  rank_results(report.results);
  return report;
}

std::string ordinal(std::size_t rank) {
  const std::size_t mod100 = rank % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (rank % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(rank) + suffix;
}

nlohmann::json to_json(const BenchmarkReport& report, bool include_timing) {
  nlohmann::json methods = nlohmann::json::array();
  nlohmann::json ranking = nlohmann::json::array();
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const auto& r = report.results[i];
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t a = 0; a < r.appliances.size(); ++a) per[r.appliances[a]] = r.appliance_mae[a];
    methods.push_back({{"rank", i + 1},
                       {"method", std::string(to_string(r.method))},
                       {"config", to_json(r.config)},
                       {"validation_mae", r.validation_loss},
                       {"appliance_mae", per},
                       {"average_mae", r.average_mae},
                       {"accuracy", r.accuracy},
                       {"wall_ms", include_timing ? nlohmann::json(r.wall_ms) : nlohmann::json(nullptr)}});
    ranking.push_back(std::string(to_string(r.method)));
  }
  return {{"methods", methods}, {"ranking", ranking}};
}

std::string format_table(const BenchmarkReport& report) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-6s %-10s %12s\n", "Rank", "Approach", "MAE");
  os << line;
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const auto& r = report.results[i];
    std::snprintf(line, sizeof line, "%-6s %-10s %12.2f\n", ordinal(i + 1).c_str(),
                  std::string(to_string(r.method)).c_str(), r.average_mae);
    os << line;
  }
  return os.str();
}

}  // namespace autonilm
