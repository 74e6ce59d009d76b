#pragma once

// Appliance power-state extraction and Combinatorial Optimization
// disaggregation (per-timestep exhaustive search over state combinations).

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace autonilm {

struct StateFit {
  std::vector<double> levels;  // ascending, levels[0] == 0
  bool degenerate = false;     // fewer distinct levels than requested
  std::string diagnostic;
};

/// Evenly spaced quantiles (min .. max) used to seed 1-D k-means.
std::vector<double> quantile_centers(std::span<const double> series, int k);
/// Sum of squared distances to the nearest center.
double kmeans_objective(std::span<const double> series, std::span<const double> centers);
/// Lloyd iterations from `centers`; returns the refined centers (unsorted order kept).
std::vector<double> kmeans_1d(std::span<const double> series, std::vector<double> centers,
                              int max_iterations = 50);

/// 1-D k-means with quantile initialisation, duplicates collapsed, smallest
/// level snapped to 0 W. A single non-zero level becomes {0, level}.
/// Throws DataError when the series is shorter than n_states, ConfigError
/// when n_states < 2.
StateFit fit_states(std::span<const double> series, int n_states);

struct ApplianceStateLibrary {
  std::vector<std::string> names;
  std::vector<std::vector<double>> levels;

  std::size_t size() const { return levels.size(); }
  /// Throws ConfigError when an invariant is broken.
  void check() const;
};

inline constexpr double kMaxCoCombinations = 1e6;

/// Per timestep, the level combination minimising |aggregate - sum|; ties go
/// to fewer active appliances, then to the lexicographically first index
/// tuple. Returns time x appliance watts.
Eigen::MatrixXd disaggregate_co(const ApplianceStateLibrary& library, std::span<const double> aggregate);

}  // namespace autonilm
