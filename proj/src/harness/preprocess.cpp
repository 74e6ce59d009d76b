#include "autonilm/harness/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "autonilm/error.hpp"

namespace autonilm {

Standardized standardize(std::span<const double> series) {
  if (series.empty()) throw DataError("cannot standardize an empty series");
  Standardized out;
  const double n = static_cast<double>(series.size());
  for (double x : series) out.mean += x;
  out.mean /= n;
  double var = 0.0;
  for (double x : series) var += (x - out.mean) * (x - out.mean);
  out.std = std::max(kStdFloor, std::sqrt(var / n));
  out.values.reserve(series.size());
  for (double x : series) out.values.push_back((x - out.mean) / out.std);
  return out;
}

std::vector<double> destandardize(std::span<const double> values, double mean, double std) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v * std + mean);
  return out;
}

RegressionDataset make_windows(std::span<const double> mains, std::span<const double> appliance, int length,
                               int stride) {
  if (length < 1) throw ConfigError("window length must be at least 1");
  if (stride < 1) throw ConfigError("window stride must be at least 1");
  if (mains.size() != appliance.size()) throw DataError("mains and appliance series differ in length");
  if (mains.size() < static_cast<std::size_t>(length))
    throw DataError("series of " + std::to_string(mains.size()) + " samples is shorter than window length " +
                    std::to_string(length));

  const auto total = static_cast<Eigen::Index>(mains.size()) - length + 1;
  const Eigen::Index rows = (total + stride - 1) / stride;
  RegressionDataset out{Eigen::MatrixXd(rows, length), Eigen::VectorXd(rows)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index i = r * stride;
    for (int j = 0; j < length; ++j) out.inputs(r, j) = mains[static_cast<std::size_t>(i + j)];
    out.targets[r] = appliance[static_cast<std::size_t>(i + length - 1)];
  }
  return out;
}

}  // namespace autonilm
