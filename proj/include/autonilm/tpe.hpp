#pragma once

// Tree-structured Parzen Estimator over a conditional SearchSpace.
//
// Completed trials are split into a good set (lowest losses) and a bad set.
// For the root method choice and for every parameter of the selected branch a
// density l(x) is fitted on the good set and g(x) on the bad set; candidates
// drawn from l are ranked by l(x)/g(x). Branch parameters are fitted only on
// trials of that branch.

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "autonilm/searchspace.hpp"
#include "json.hpp"

namespace autonilm {

enum class TrialStatus { Pending, Completed, Failed };

std::string_view to_string(TrialStatus s);

struct Trial {
  std::int64_t id = 0;
  Configuration config;
  std::optional<double> loss;  // set iff status == Completed
  TrialStatus status = TrialStatus::Pending;
  std::optional<double> wall_ms;
  std::string failure;  // reason, for failed trials
};

class TrialHistory {
 public:
  const std::vector<Trial>& trials() const { return trials_; }
  std::int64_t next_id() const { return static_cast<std::int64_t>(trials_.size()); }

  std::int64_t add_pending(Configuration config);
  /// Throws Error on unknown id, non-pending trial, or non-finite loss.
  void complete(std::int64_t id, double loss);
  void fail(std::int64_t id, std::string reason);
  void set_wall_ms(std::int64_t id, double ms);

  const Trial& at(std::int64_t id) const;
  std::size_t completed_count() const;

 private:
  Trial& pending(std::int64_t id);
  std::vector<Trial> trials_;
};

struct TpeConfig {
  double gamma = 0.25;
  int n_candidates = 24;
  int n_startup = 10;
  double prior_weight = 1.0;
  std::uint64_t seed = 0;
};

/// Size of the good set for n completed trials: min(25, ceil(gamma*sqrt(n))), at least 1.
std::size_t good_count(std::size_t n, double gamma);

struct ObservationSplit {
  std::vector<Trial> good;
  std::vector<Trial> bad;
};

/// Completed trials sorted by ascending loss (stable in id) and cut at
/// good_count. Throws Error if nothing has completed.
ObservationSplit split_observations(const TrialHistory& history, double gamma);

class ParzenDensity {
 public:
  enum class Kind { ContinuousMixture, Categorical };

  struct Component {
    double center;
    double bandwidth;
    double weight;
  };

  /// Truncated-Gaussian mixture on [lo, hi]. `quantized` rounds samples to
  /// integers clamped to [round(lo), round(hi)].
  static ParzenDensity mixture(double lo, double hi, std::vector<Component> components,
                               bool quantized = false);
  static ParzenDensity categorical(std::vector<double> probabilities);

  Kind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool quantized() const { return quantized_; }
  const std::vector<Component>& components() const { return components_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  /// Continuous: density at x (0 outside the support). Categorical: the
  /// probability of label index x.
  double pdf(double x) const;
  double log_pdf(double x) const;
  /// Continuous: a point (rounded when quantized). Categorical: an index.
  double sample(std::mt19937_64& rng) const;

 private:
  Kind kind_ = Kind::Categorical;
  double lo_ = 0.0;
  double hi_ = 0.0;
  bool quantized_ = false;
  std::vector<Component> components_;
  std::vector<double> normalizers_;  // per-component truncation mass
  std::vector<double> probabilities_;
};

/// Discrete domains -> categorical with p(label) proportional to
/// prior_weight + count(label). Continuous domains -> one component per
/// observation plus a prior component at the midpoint with the full range as
/// bandwidth. Integer domains are fitted on [lo - 0.5, hi + 0.5].
/// Throws DomainError for values outside the domain.
ParzenDensity fit_parzen(std::span<const Value> values, const ParamSpec& spec,
                         double prior_weight);

/// Encoding of a parameter value on a density's axis (label index for
/// discrete domains, the number otherwise).
double encode_value(const ParamSpec& spec, const Value& v);
Value decode_value(const ParamSpec& spec, double x);

/// Index of the candidate maximizing l(x)/g(x); first occurrence wins ties.
std::size_t best_candidate_index(std::span<const double> candidates, const ParzenDensity& l,
                                 const ParzenDensity& g);
double score_candidates(std::span<const double> candidates, const ParzenDensity& l,
                        const ParzenDensity& g);

struct Suggestion {
  std::int64_t id;
  Configuration config;
};

/// Proposes a configuration and registers it as a pending trial.
Suggestion suggest(TrialHistory& history, const SearchSpace& space, const TpeConfig& cfg,
                   std::mt19937_64& rng);

void report(TrialHistory& history, std::int64_t id, double loss);
void report_failure(TrialHistory& history, std::int64_t id, std::string reason);

/// Returns the loss of a configuration; throwing marks the trial failed.
using Objective = std::function<double(const Configuration&)>;

/// History guarded for concurrent suggest/report from several workers.
class AsyncOptimizer {
 public:
  AsyncOptimizer(SearchSpace space, TpeConfig cfg);

  Suggestion suggest();
  void report(std::int64_t id, double loss, std::optional<double> wall_ms = std::nullopt);
  void report_failure(std::int64_t id, std::string reason,
                      std::optional<double> wall_ms = std::nullopt);
  TrialHistory snapshot() const;

 private:
  SearchSpace space_;
  TpeConfig cfg_;
  std::mt19937_64 rng_;
  TrialHistory history_;
  mutable std::mutex mutex_;
};

struct RunOptions {
  int workers = 1;
  bool record_timing = false;
};

struct RunResult {
  Trial best;
  TrialHistory history;
};

/// Runs `budget` suggest/evaluate/report rounds. Objective exceptions and
/// non-finite losses become failed trials; throws Error only when every
/// trial failed.
RunResult run_optimization(const Objective& objective, const SearchSpace& space,
                           const TpeConfig& cfg, int budget, RunOptions options = {});

/// Uniform prior sampling with the same bookkeeping; the random-search baseline.
RunResult run_random_search(const Objective& objective, const SearchSpace& space,
                            std::uint64_t seed, int budget);

nlohmann::json to_json(const Trial& trial);
nlohmann::json run_report(const RunResult& result, const TpeConfig& cfg, int budget);

}  // namespace autonilm
