#pragma once

#include <span>
#include <vector>

#include "autonilm/estimators/regression_dataset.hpp"

namespace autonilm {

struct Standardized {
  std::vector<double> values;
  double mean = 0.0;
  double std = 1.0;  // population std, floored at kStdFloor
};

inline constexpr double kStdFloor = 1e-8;

Standardized standardize(std::span<const double> series);
std::vector<double> destandardize(std::span<const double> values, double mean, double std);

/// Row i = mains[i .. i+length), target = appliance[i+length-1]. With
/// stride s only every s-th row is kept. Throws DataError when the series
/// is shorter than the window or the two series differ in length.
RegressionDataset make_windows(std::span<const double> mains, std::span<const double> appliance,
                               int length, int stride = 1);

}  // namespace autonilm
