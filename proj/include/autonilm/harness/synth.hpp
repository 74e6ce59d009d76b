#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autonilm/harness/dataset.hpp"
#include "json.hpp"

namespace autonilm {

/// One synthetic appliance: a Markov chain over `levels` (levels[0] is the
/// off state). From off it switches on with p_on, landing on a uniformly
/// chosen non-off level; from any on level it switches off with p_off.
struct SynthAppliance {
  std::string name;
  std::vector<double> levels;  // watts
  double p_on = 0.05;
  double p_off = 0.05;
};

struct SynthSpec {
  std::vector<SynthAppliance> appliances;
  std::vector<SynthAppliance> unmetered;  // drawn into mains only, no column
  double duration = 0.0;  // seconds
  double rate = 0.05;     // Hz
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double start = 0.0;  // Unix seconds of the first sample

  std::size_t samples() const;
  /// Throws ConfigError when an invariant is broken.
  void check() const;
};

/// The shipped scenario: three metered two-level appliances plus one unmetered
/// load, 10,000 samples at 0.05 Hz.
SynthSpec default_synth_spec();

/// Long-run fraction of time spent on for a two-state chain.
double stationary_on_probability(double p_on, double p_off);

/// Fully determined by the spec (including its seed).
TimeSeriesDataset generate_synthetic(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

}  // namespace autonilm
