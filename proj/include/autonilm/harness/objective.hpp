#pragma once

// Connects datasets and estimators to the optimizer: every configuration is
// fitted on one time range and scored (validation MAE, watts) on another.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autonilm/estimators/external.hpp"
#include "autonilm/estimators/fcnn.hpp"
#include "autonilm/harness/dataset.hpp"
#include "autonilm/tpe.hpp"

namespace autonilm {

/// Chronological train/test split, by fraction or by a boundary timestamp
/// (the first test sample is the first one at or after it).
struct SplitSpec {
  double train_fraction = 0.8;
  std::optional<double> boundary;

  /// Index of the first test sample. Throws DataError if either side is empty.
  std::size_t train_end(const TimeSeriesDataset& data) const;
};

struct TimeRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct HarnessOptions {
  int tree_window = 9;               // DT/RF feature window, samples
  double validation_fraction = 0.2;  // tail of the training range used for validation
  FcnnTrainOptions fcnn;
  std::uint64_t seed = 0;  // RF bootstrap and FCNN initialisation
  ExternalRegistry external;
  std::string dataset_ref;  // passed to external objectives
};

/// Predicted watts per requested appliance over a scored range.
struct Predictions {
  std::vector<std::string> appliances;
  std::vector<std::vector<double>> values;
};

/// Validates `config` (structure and pipeline rules in AutoML mode), fits the
/// native estimator on `fit` and predicts `score`. Windowed methods may read
/// mains before `score.begin` as context. Throws ConfigError for invalid or
/// external configurations.
Predictions fit_and_predict(const TimeSeriesDataset& data, const Configuration& config,
                            const std::vector<std::string>& appliances, TimeRange fit, TimeRange score,
                            const HarnessOptions& options);

/// Training range of `split`, with its last validation_fraction as the scored range.
std::pair<TimeRange, TimeRange> validation_ranges(const TimeSeriesDataset& data, const SplitSpec& split,
                                                  const HarnessOptions& options);

/// Loss = validation MAE of `appliance`. External methods are delegated to
/// their registered endpoint.
Objective objective_for(std::shared_ptr<const TimeSeriesDataset> data, const std::string& appliance,
                        SplitSpec split, HarnessOptions options = {});

/// Loss = mean validation MAE over every appliance.
Objective objective_for_all(std::shared_ptr<const TimeSeriesDataset> data, SplitSpec split,
                            HarnessOptions options = {});

}  // namespace autonilm
