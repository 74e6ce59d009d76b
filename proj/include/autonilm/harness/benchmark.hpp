#pragma once

// Per-method model selection and test-range comparison.

#include <memory>
#include <string>
#include <vector>

#include "autonilm/harness/objective.hpp"
#include "json.hpp"

namespace autonilm {

struct BenchmarkOptions {
  std::vector<Method> methods{Method::DT, Method::RF, Method::FCNN, Method::FHMM, Method::CO};
  int budget = 15;
  TpeConfig tpe;
  RunOptions run;
  SplitSpec split;
  HarnessOptions harness;
};

struct MethodResult {
  Method method;
  Configuration config;  // winner of the search
  double validation_loss = 0.0;
  std::vector<std::string> appliances;
  std::vector<double> appliance_mae;  // test range, watts
  double average_mae = 0.0;
  double accuracy = 0.0;
  double wall_ms = 0.0;
};

struct BenchmarkReport {
  std::vector<MethodResult> results;  // ranked: ascending average MAE, ties by label
};

/// Searches each method on its own single-branch space (loss = mean
/// validation MAE over all appliances), retrains the winner on the whole
/// training range and scores it on the test range.
BenchmarkReport run_benchmark(std::shared_ptr<const TimeSeriesDataset> data, const BenchmarkOptions& options);

/// Orders results ascending by average MAE, ties alphabetical by method label.
void rank_results(std::vector<MethodResult>& results);

std::string ordinal(std::size_t rank);
nlohmann::json to_json(const BenchmarkReport& report, bool include_timing = false);
/// Aligned Rank / Approach / MAE table.
std::string format_table(const BenchmarkReport& report);

}  // namespace autonilm
