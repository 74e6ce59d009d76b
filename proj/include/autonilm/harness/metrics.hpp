#pragma once

#include <span>
#include <vector>

namespace autonilm {

/// Mean absolute error in watts. Throws DataError on empty or mismatched input.
double mae(std::span<const double> predicted, std::span<const double> truth);

/// 1 - sum_t sum_i |pred_i(t) - truth_i(t)| / (2 sum_t mains(t)).
/// `predictions[i]` and `truths[i]` are appliance i's series. Throws
/// DataError on misaligned shapes or zero mains energy.
double disaggregation_accuracy(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<double>>& truths, std::span<const double> mains);

}  // namespace autonilm
