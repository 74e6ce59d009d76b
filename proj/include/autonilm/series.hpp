#pragma once

#include <string>
#include <vector>

namespace autonilm {

/// A named power series in watts.
struct NamedSeries {
  std::string name;
  std::vector<double> values;

  bool operator==(const NamedSeries&) const = default;
};

}  // namespace autonilm
