#include "autonilm/harness/metrics.hpp"

#include <cmath>

#include "autonilm/error.hpp"

namespace autonilm {

double mae(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size())
    throw DataError("mae: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truth.size()) + " targets");
  if (truth.empty()) throw DataError("mae: empty series");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += std::abs(predicted[i] - truth[i]);
  return sum / static_cast<double>(truth.size());
}

double disaggregation_accuracy(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<double>>& truths, std::span<const double> mains) {
  if (predictions.size() != truths.size()) throw DataError("accuracy: appliance counts differ");
  double error = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (predictions[i].size() != mains.size() || truths[i].size() != mains.size())
      throw DataError("accuracy: series are not aligned with mains");
    for (std::size_t t = 0; t < mains.size(); ++t) error += std::abs(predictions[i][t] - truths[i][t]);
  }
  double energy = 0.0;
  for (double m : mains) energy += m;
  if (!(energy > 0.0)) throw DataError("accuracy: mains carry no energy");
  return 1.0 - error / (2.0 * energy);
}

}  // namespace autonilm
