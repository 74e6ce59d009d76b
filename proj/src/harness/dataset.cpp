#include "autonilm/harness/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "autonilm/error.hpp"

namespace autonilm {

namespace {

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string location(const std::string& origin, std::size_t line) {
  return origin + ":" + std::to_string(line);
}

}  // namespace

std::vector<std::string> TimeSeriesDataset::appliance_names() const {
  std::vector<std::string> out;
  for (const auto& a : appliances) out.push_back(a.name);
  return out;
}

bool TimeSeriesDataset::has_appliance(const std::string& name) const {
  return std::any_of(appliances.begin(), appliances.end(), [&](const NamedSeries& a) { return a.name == name; });
}

const NamedSeries& TimeSeriesDataset::appliance(const std::string& name) const {
  for (const auto& a : appliances)
    if (a.name == name) return a;
  std::string available;
  for (const auto& a : appliances) available += (available.empty() ? "" : ", ") + a.name;
  throw DataError("no appliance named '" + name + "'; available: " + available);
}

TimeSeriesDataset TimeSeriesDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw DataError("slice out of range");
  auto cut = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin),
                               v.begin() + static_cast<std::ptrdiff_t>(end));
  };
  TimeSeriesDataset out;
  out.sampling_rate = sampling_rate;
  out.timestamps = cut(timestamps);
  out.mains = cut(mains);
  for (const auto& a : appliances) out.appliances.push_back({a.name, cut(a.values)});
  return out;
}

void TimeSeriesDataset::check() const {
  if (!(sampling_rate > 0.0)) throw DataError("sampling rate must be positive");
  if (timestamps.size() != mains.size()) throw DataError("timestamps and mains differ in length");
  auto check_values = [](const std::vector<double>& v, const std::string& what) {
    for (double x : v)
      if (!std::isfinite(x) || x < 0.0) throw DataError(what + " contains a negative or non-finite value");
  };
  check_values(mains, "mains");
  for (const auto& a : appliances) {
    if (a.values.size() != mains.size()) throw DataError("appliance " + a.name + " differs in length from mains");
    check_values(a.values, "appliance " + a.name);
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (!(timestamps[i] > timestamps[i - 1])) throw DataError("timestamps are not strictly increasing");
}

RawChannel read_channel_file(const std::filesystem::path& file, std::string name) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  RawChannel ch;
  ch.name = std::move(name);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line, ' ');
    fields.erase(std::remove_if(fields.begin(), fields.end(), [](std::string_view f) { return f.empty(); }),
                 fields.end());
    double t = 0.0;
    double w = 0.0;
    if (fields.size() != 2 || !parse_double(fields[0], t) || !parse_double(fields[1], w))
      throw DataError(location(file.string(), n) + ": expected 'unix_seconds watts', got '" + line + "'");
    if (!ch.timestamps.empty() && !(t > ch.timestamps.back()))
      throw DataError(location(file.string(), n) + ": timestamps are not strictly increasing");
    ch.timestamps.push_back(t);
    ch.values.push_back(w);
  }
  return ch;
}

RawRecording load_redd(const std::filesystem::path& directory) {
  const auto labels_file = directory / "labels.dat";
  std::ifstream in(labels_file);
  if (!in) throw DataError("missing labels file " + labels_file.string());

  std::vector<std::pair<int, std::string>> labels;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    int channel = 0;
    std::string name;
    if (!(ls >> channel >> name))
      throw DataError(location(labels_file.string(), n) + ": expected 'channel_number appliance_name'");
    labels.emplace_back(channel, name);
  }
  std::sort(labels.begin(), labels.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  auto channel_path = [&](int k) { return directory / ("channel_" + std::to_string(k) + ".dat"); };
  auto load = [&](int k, const std::string& name) {
    const auto p = channel_path(k);
    if (!std::filesystem::exists(p))
      throw DataError("channel " + std::to_string(k) + " (" + name + ") listed in labels.dat but " + p.string() +
                      " is missing");
    return read_channel_file(p, name);
  };

  RawRecording raw;
  std::vector<RawChannel> phases;
  std::map<std::string, int> seen;
  for (const auto& [k, name] : labels) {
    if (k == 1 || k == 2) {
      phases.push_back(load(k, name));
      continue;
    }
    int count = ++seen[name];
    std::string key = count == 1 ? name : name + "_" + std::to_string(count);
    raw.appliances.push_back(load(k, key));
  }
  if (phases.empty()) throw DataError("labels.dat lists no mains channel (1 or 2)");

  raw.mains = phases[0];
  raw.mains.name = "mains";
  if (phases.size() == 2) {
    // Sum the two phases where both recorded a sample.
    RawChannel sum{"mains", {}, {}};
    const auto& a = phases[0];
    const auto& b = phases[1];
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.timestamps.size() && j < b.timestamps.size()) {
      if (a.timestamps[i] < b.timestamps[j]) ++i;
      else if (b.timestamps[j] < a.timestamps[i]) ++j;
      else {
        sum.timestamps.push_back(a.timestamps[i]);
        sum.values.push_back(a.values[i] + b.values[j]);
        ++i;
        ++j;
      }
    }
    if (sum.timestamps.empty()) throw DataError("mains channels 1 and 2 share no timestamps");
    raw.mains = std::move(sum);
  }
  return raw;
}

ResampleResult resample(const RawRecording& raw, double rate) {
  if (!(rate > 0.0)) throw ConfigError("resampling rate must be positive");
  std::vector<const RawChannel*> channels{&raw.mains};
  for (const auto& a : raw.appliances) channels.push_back(&a);

  double start = -std::numeric_limits<double>::infinity();
  double end = std::numeric_limits<double>::infinity();
  for (const auto* c : channels) {
    if (c->timestamps.empty()) throw DataError("channel " + c->name + " has no samples");
    start = std::max(start, c->timestamps.front());
    end = std::min(end, c->timestamps.back());
  }
  if (start > end) throw DataError("channels do not overlap in time");

  const double period = 1.0 / rate;
  const auto buckets = static_cast<std::size_t>(std::floor((end - start) / period)) + 1;

  ResampleResult result;
  std::vector<std::vector<double>> values(channels.size(), std::vector<double>(buckets, 0.0));
  std::vector<char> valid(buckets, 1);
  std::size_t filled = 0;

  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = *channels[c];
    std::vector<double> sum(buckets, 0.0);
    std::vector<std::size_t> count(buckets, 0);
    for (std::size_t i = 0; i < ch.timestamps.size(); ++i) {
      const double t = ch.timestamps[i];
      if (t < start || t > end) continue;
      auto k = static_cast<std::size_t>(std::floor((t - start) / period));
      k = std::min(k, buckets - 1);
      sum[k] += ch.values[i];
      ++count[k];
    }
    std::size_t k = 0;
    while (k < buckets) {
      if (count[k] > 0) {
        values[c][k] = sum[k] / static_cast<double>(count[k]);
        ++k;
        continue;
      }
      std::size_t gap_end = k;
      while (gap_end < buckets && count[gap_end] == 0) ++gap_end;
      const std::size_t len = gap_end - k;
      if (k > 0 && len <= static_cast<std::size_t>(kMaxForwardFill)) {
        for (std::size_t g = k; g < gap_end; ++g) values[c][g] = values[c][k - 1];
        filled += len;
      } else {
        for (std::size_t g = k; g < gap_end; ++g) valid[g] = 0;
        result.diagnostics.push_back("channel " + ch.name + ": gap of " + std::to_string(len) +
                                     " empty bucket(s) at bucket " + std::to_string(k) + " splits the recording");
      }
      k = gap_end;
    }
  }
  if (filled > 0)
    result.diagnostics.push_back("forward-filled " + std::to_string(filled) + " empty bucket(s)");

  std::size_t best_begin = 0;
  std::size_t best_len = 0;
  std::size_t segments = 0;
  for (std::size_t k = 0; k < buckets;) {
    if (!valid[k]) {
      ++k;
      continue;
    }
    std::size_t e = k;
    while (e < buckets && valid[e]) ++e;
    ++segments;
    if (e - k > best_len) {
      best_len = e - k;
      best_begin = k;
    }
    k = e;
  }
  if (best_len == 0) throw DataError("no complete bucket remains after resampling");
  if (segments > 1)
    result.diagnostics.push_back("recording split into " + std::to_string(segments) +
                                 " segments; kept the longest (" + std::to_string(best_len) + " samples)");

  auto& out = result.data;
  out.sampling_rate = rate;
  for (std::size_t k = best_begin; k < best_begin + best_len; ++k)
    out.timestamps.push_back(start + static_cast<double>(k) * period);
  auto take = [&](std::size_t c) {
    return std::vector<double>(values[c].begin() + static_cast<std::ptrdiff_t>(best_begin),
                               values[c].begin() + static_cast<std::ptrdiff_t>(best_begin + best_len));
  };
  out.mains = take(0);
  for (std::size_t c = 1; c < channels.size(); ++c) out.appliances.push_back({channels[c]->name, take(c)});
  return result;
}

TimeSeriesDataset read_csv(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty CSV file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line, ',');
  if (header.size() < 2 || header[0] != "timestamp" || header[1] != "mains")
    throw DataError(origin + ":1: header must start with 'timestamp,mains'");

  TimeSeriesDataset data;
  for (std::size_t i = 2; i < header.size(); ++i) {
    if (header[i].empty()) throw DataError(origin + ":1: empty appliance name");
    data.appliances.push_back({std::string(header[i]), {}});
  }

  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != header.size())
      throw DataError(location(origin, n) + ": expected " + std::to_string(header.size()) + " fields");
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (!parse_double(fields[i], row[i])) throw DataError(location(origin, n) + ": unparsable number");
    if (!data.timestamps.empty() && !(row[0] > data.timestamps.back()))
      throw DataError(location(origin, n) + ": timestamps are not strictly increasing");
    data.timestamps.push_back(row[0]);
    data.mains.push_back(row[1]);
    for (std::size_t i = 2; i < row.size(); ++i) data.appliances[i - 2].values.push_back(row[i]);
  }
  if (data.timestamps.size() < 2) throw DataError(origin + ": at least two samples are required");

  const double period = (data.timestamps.back() - data.timestamps.front()) /
                        static_cast<double>(data.timestamps.size() - 1);
  for (std::size_t i = 1; i < data.timestamps.size(); ++i)
    if (std::abs((data.timestamps[i] - data.timestamps[i - 1]) - period) > 1e-6 * period)
      throw DataError(origin + ": timestamps are not uniformly spaced; resample first");
  data.sampling_rate = 1.0 / period;
  data.check();
  return data;
}

TimeSeriesDataset load_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  TimeSeriesDataset d = read_csv(in, file.string());
  return d;
}

void write_csv(const TimeSeriesDataset& data, std::ostream& out) {
  out << "timestamp,mains";
  for (const auto& a : data.appliances) out << ',' << a.name;
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    put(data.timestamps[i]);
    out << ',';
    put(data.mains[i]);
    for (const auto& a : data.appliances) {
      out << ',';
      put(a.values[i]);
    }
    out << '\n';
  }
}

void write_csv(const TimeSeriesDataset& data, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  write_csv(data, out);
}

}  // namespace autonilm
