#pragma once

// Factorial HMM with one Markov chain per appliance and a shared Gaussian
// emission on the aggregate. Inference is exact Viterbi over the joint state
// space, with the max over previous joint states taken one chain at a time.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autonilm/series.hpp"

namespace autonilm {

struct MarkovChain {
  std::string name;
  std::vector<double> means;  // watts per state
  Eigen::VectorXd initial;
  Eigen::MatrixXd transition;  // rows: from-state
};

struct FhmmModel {
  std::vector<MarkovChain> chains;
  double sigma = 1.0;  // emission noise, watts

  std::size_t joint_states() const;
  /// Throws ConfigError when an invariant is broken.
  void check() const;
};

inline constexpr std::size_t kMaxJointStates = 4096;

/// `aggregate` must align with every appliance series.
FhmmModel fit_fhmm(std::span<const NamedSeries> appliances, std::span<const double> aggregate, int n_states);

/// Per timestep, the state index of every chain.
using StatePath = std::vector<std::vector<int>>;

StatePath viterbi(const FhmmModel& model, std::span<const double> aggregate);
double path_log_likelihood(const FhmmModel& model, std::span<const double> aggregate, const StatePath& path);

/// Time x appliance watts along the Viterbi path.
Eigen::MatrixXd disaggregate_fhmm(const FhmmModel& model, std::span<const double> aggregate);

}  // namespace autonilm
