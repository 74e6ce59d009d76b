#pragma once

// Delegation of branches without a native trainer (GRU, LSTM, DAE) to a
// user-supplied command. The command receives the configuration as JSON on
// standard input and prints a single decimal loss on standard output.

#include <chrono>
#include <map>
#include <optional>
#include <string>

#include "autonilm/error.hpp"
#include "autonilm/searchspace.hpp"

namespace autonilm {

class ExternalFailure : public Error {
 public:
  using Error::Error;
};

struct ExternalEndpoint {
  std::string command;  // run through /bin/sh -c
  std::chrono::milliseconds timeout{std::chrono::seconds(600)};
};

class ExternalRegistry {
 public:
  /// Reads AUTONILM_EXT_<METHOD> for every external method.
  static ExternalRegistry from_environment();

  /// Throws ConfigError for methods with a native trainer.
  void add(Method method, ExternalEndpoint endpoint);
  const ExternalEndpoint* find(Method method) const;
  /// Throws ConfigError naming the first external branch of `space` that has
  /// no registered endpoint.
  void require(const SearchSpace& space) const;

 private:
  std::map<Method, ExternalEndpoint> endpoints_;
};

/// Runs the endpoint once. Throws ExternalFailure on timeout, non-zero exit,
/// or output that is not a single finite number.
double external_objective(const ExternalEndpoint& endpoint, const Configuration& config,
                          const std::string& dataset_ref);

}  // namespace autonilm
