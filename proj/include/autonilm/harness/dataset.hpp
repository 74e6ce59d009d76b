#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "autonilm/series.hpp"

namespace autonilm {

/// Aggregate mains and per-appliance power on a uniform time grid.
struct TimeSeriesDataset {
  double sampling_rate = 1.0;      // Hz
  std::vector<double> timestamps;  // Unix seconds
  std::vector<double> mains;       // watts
  std::vector<NamedSeries> appliances;

  std::size_t size() const { return mains.size(); }
  std::vector<std::string> appliance_names() const;
  /// Throws DataError listing the available appliances when absent.
  const NamedSeries& appliance(const std::string& name) const;
  bool has_appliance(const std::string& name) const;

  /// Rows [begin, end).
  TimeSeriesDataset slice(std::size_t begin, std::size_t end) const;

  /// Throws DataError when lengths differ or values are negative/non-finite.
  void check() const;

  bool operator==(const TimeSeriesDataset&) const = default;
};

/// One channel as recorded, before alignment.
struct RawChannel {
  std::string name;
  std::vector<double> timestamps;
  std::vector<double> values;
};

struct RawRecording {
  RawChannel mains;
  std::vector<RawChannel> appliances;
};

/// REDD low-frequency house directory: labels.dat plus channel_<k>.dat.
/// Channels 1 and 2 are summed (on shared timestamps) into mains.
RawRecording load_redd(const std::filesystem::path& directory);

/// Parses "unix_seconds watts" lines. Throws DataError naming the file and
/// line for malformed or non-increasing input.
RawChannel read_channel_file(const std::filesystem::path& file, std::string name);

struct ResampleResult {
  TimeSeriesDataset data;
  std::vector<std::string> diagnostics;
};

inline constexpr int kMaxForwardFill = 3;

/// Bucket means on a common grid starting at the channels' overlap. Runs of
/// up to kMaxForwardFill empty buckets are forward-filled; longer runs split
/// the recording and the longest contiguous segment is kept.
ResampleResult resample(const RawRecording& raw, double rate);

/// Header `timestamp,mains,<appliance...>`. The rate is inferred from the
/// (required uniform) timestamp spacing.
TimeSeriesDataset load_csv(const std::filesystem::path& file);
TimeSeriesDataset read_csv(std::istream& in, const std::string& origin = "<stream>");
void write_csv(const TimeSeriesDataset& data, std::ostream& out);
void write_csv(const TimeSeriesDataset& data, const std::filesystem::path& file);

}  // namespace autonilm
