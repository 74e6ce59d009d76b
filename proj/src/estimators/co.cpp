#include "autonilm/estimators/co.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "autonilm/error.hpp"

namespace autonilm {

namespace {

std::size_t nearest(std::span<const double> centers, double x) {
  std::size_t best = 0;
  double best_d = std::abs(x - centers[0]);
  for (std::size_t j = 1; j < centers.size(); ++j) {
    double d = std::abs(x - centers[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

bool same_level(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

}  // namespace

std::vector<double> quantile_centers(std::span<const double> series, int k) {
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  const double last = static_cast<double>(sorted.size() - 1);
  for (int j = 0; j < k; ++j) {
    const double pos = k == 1 ? 0.0 : last * j / (k - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    const double v = i + 1 < sorted.size() ? sorted[i] + frac * (sorted[i + 1] - sorted[i]) : sorted[i];
    out.push_back(v);
  }
  return out;
}

double kmeans_objective(std::span<const double> series, std::span<const double> centers) {
  double total = 0.0;
  for (double x : series) {
    double d = x - centers[nearest(centers, x)];
    total += d * d;
  }
  return total;
}

std::vector<double> kmeans_1d(std::span<const double> series, std::vector<double> centers, int max_iterations) {
  std::vector<std::size_t> assignment(series.size(), centers.size());
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < series.size(); ++i) {
      std::size_t a = nearest(centers, series[i]);
      if (a != assignment[i]) {
        assignment[i] = a;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sum(centers.size(), 0.0);
    std::vector<std::size_t> count(centers.size(), 0);
    for (std::size_t i = 0; i < series.size(); ++i) {
      sum[assignment[i]] += series[i];
      ++count[assignment[i]];
    }
    for (std::size_t j = 0; j < centers.size(); ++j)
      if (count[j] > 0) centers[j] = sum[j] / static_cast<double>(count[j]);
  }
  return centers;
}

StateFit fit_states(std::span<const double> series, int n_states) {
  if (n_states < 2) throw ConfigError("n_states must be at least 2");
  if (series.size() < static_cast<std::size_t>(n_states))
    throw DataError("series of " + std::to_string(series.size()) + " samples is shorter than n_states = " +
                    std::to_string(n_states));

  std::vector<double> centers = kmeans_1d(series, quantile_centers(series, n_states));
  for (auto& c : centers) c = std::max(0.0, c);
  std::sort(centers.begin(), centers.end());

  StateFit fit;
  for (double c : centers)
    if (fit.levels.empty() || !same_level(fit.levels.back(), c)) fit.levels.push_back(c);

  if (fit.levels.size() < static_cast<std::size_t>(n_states)) {
    fit.degenerate = true;
    fit.diagnostic = "only " + std::to_string(fit.levels.size()) + " distinct power level(s) found for " +
                     std::to_string(n_states) + " requested states";
  }
  if (fit.levels.size() == 1 && fit.levels[0] > 0.0) {
    fit.levels.insert(fit.levels.begin(), 0.0);
  } else {
    fit.levels[0] = 0.0;
  }
  return fit;
}

void ApplianceStateLibrary::check() const {
  if (levels.empty()) throw ConfigError("state library is empty");
  if (!names.empty() && names.size() != levels.size()) throw ConfigError("state library names/levels mismatch");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    if (l.empty() || l[0] != 0.0) throw ConfigError("appliance " + std::to_string(i) + ": first level must be 0 W");
    for (std::size_t j = 1; j < l.size(); ++j)
      if (!(l[j] >= l[j - 1]) || !std::isfinite(l[j]))
        throw ConfigError("appliance " + std::to_string(i) + ": levels must be finite and ascending");
  }
}

Eigen::MatrixXd disaggregate_co(const ApplianceStateLibrary& library, std::span<const double> aggregate) {
  library.check();
  const std::size_t n = library.size();
  double combos = 1.0;
  for (const auto& l : library.levels) combos *= static_cast<double>(l.size());
  if (combos > kMaxCoCombinations)
    throw ConfigError("CO would enumerate " + std::to_string(static_cast<long long>(combos)) +
                      " state combinations (limit 1e6); use fewer states or appliances");

  // Enumerate in lexicographic order of index tuples, first appliance most significant.
  const auto count = static_cast<std::size_t>(combos);
  std::vector<double> sums(count);
  std::vector<int> active(count);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t c = 0; c < count; ++c) {
    double s = 0.0;
    int a = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s += library.levels[i][idx[i]];
      a += library.levels[i][idx[i]] != 0.0 ? 1 : 0;
    }
    sums[c] = s;
    active[c] = a;
    for (std::size_t i = n; i-- > 0;) {
      if (++idx[i] < library.levels[i].size()) break;
      idx[i] = 0;
    }
  }

  Eigen::MatrixXd out(static_cast<Eigen::Index>(aggregate.size()), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < aggregate.size(); ++t) {
    std::size_t best = 0;
    double best_res = std::abs(aggregate[t] - sums[0]);
    for (std::size_t c = 1; c < count; ++c) {
      const double res = std::abs(aggregate[t] - sums[c]);
      if (res < best_res || (res == best_res && active[c] < active[best])) {
        best = c;
        best_res = res;
      }
    }
    std::size_t rem = best;
    for (std::size_t i = n; i-- > 0;) {
      const std::size_t k = library.levels[i].size();
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = library.levels[i][rem % k];
      rem /= k;
    }
  }
  return out;
}

}  // namespace autonilm
