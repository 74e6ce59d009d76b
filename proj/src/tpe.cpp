#include "autonilm/tpe.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "autonilm/error.hpp"

namespace autonilm {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

struct Support {
  double lo;
  double hi;
  bool quantized;
};

Support support_of(const ParamSpec& spec) {
  if (const auto* u = std::get_if<UniformInt>(&spec.domain))
    return {static_cast<double>(u->lo) - 0.5, static_cast<double>(u->hi) + 0.5, true};
  const auto& f = std::get<UniformFloat>(spec.domain);
  return {f.lo, f.hi, false};
}

}  // namespace

std::string_view to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::Pending: return "pending";
    case TrialStatus::Completed: return "completed";
    case TrialStatus::Failed: return "failed";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// TrialHistory

std::int64_t TrialHistory::add_pending(Configuration config) {
  Trial t;
  t.id = next_id();
  t.config = std::move(config);
  trials_.push_back(std::move(t));
  return trials_.back().id;
}

Trial& TrialHistory::pending(std::int64_t id) {
  if (id < 0 || id >= next_id()) throw Error("unknown trial id " + std::to_string(id));
  Trial& t = trials_[static_cast<std::size_t>(id)];
  if (t.status != TrialStatus::Pending)
    throw Error("trial " + std::to_string(id) + " was already reported");
  return t;
}

void TrialHistory::complete(std::int64_t id, double loss) {
  Trial& t = pending(id);
  if (!std::isfinite(loss)) throw Error("trial " + std::to_string(id) + " reported a non-finite loss");
  t.loss = loss;
  t.status = TrialStatus::Completed;
}

void TrialHistory::fail(std::int64_t id, std::string reason) {
  Trial& t = pending(id);
  t.status = TrialStatus::Failed;
  t.failure = std::move(reason);
}

void TrialHistory::set_wall_ms(std::int64_t id, double ms) {
  if (id < 0 || id >= next_id()) throw Error("unknown trial id " + std::to_string(id));
  trials_[static_cast<std::size_t>(id)].wall_ms = ms;
}

const Trial& TrialHistory::at(std::int64_t id) const {
  if (id < 0 || id >= next_id()) throw Error("unknown trial id " + std::to_string(id));
  return trials_[static_cast<std::size_t>(id)];
}

std::size_t TrialHistory::completed_count() const {
  return static_cast<std::size_t>(std::count_if(trials_.begin(), trials_.end(), [](const Trial& t) {
    return t.status == TrialStatus::Completed;
  }));
}

// ---------------------------------------------------------------------------
// Good/bad split

std::size_t good_count(std::size_t n, double gamma) {
  auto k = static_cast<std::size_t>(std::ceil(gamma * std::sqrt(static_cast<double>(n))));
  return std::max<std::size_t>(1, std::min<std::size_t>(25, k));
}

ObservationSplit split_observations(const TrialHistory& history, double gamma) {
  std::vector<Trial> done;
  for (const auto& t : history.trials())
    if (t.status == TrialStatus::Completed) done.push_back(t);
  if (done.empty()) throw Error("cannot split a history without completed trials");
  std::stable_sort(done.begin(), done.end(),
                   [](const Trial& a, const Trial& b) { return *a.loss < *b.loss; });
  const std::size_t n_good = std::min(done.size(), good_count(done.size(), gamma));
  ObservationSplit out;
  out.good.assign(done.begin(), done.begin() + static_cast<std::ptrdiff_t>(n_good));
  out.bad.assign(done.begin() + static_cast<std::ptrdiff_t>(n_good), done.end());
  return out;
}

// ---------------------------------------------------------------------------
// ParzenDensity

ParzenDensity ParzenDensity::mixture(double lo, double hi, std::vector<Component> components,
                                     bool quantized) {
  ParzenDensity d;
  d.kind_ = Kind::ContinuousMixture;
  d.lo_ = lo;
  d.hi_ = hi;
  d.quantized_ = quantized;
  d.components_ = std::move(components);
  for (const auto& c : d.components_) {
    double mass = normal_cdf((hi - c.center) / c.bandwidth) - normal_cdf((lo - c.center) / c.bandwidth);
    d.normalizers_.push_back(std::max(mass, std::numeric_limits<double>::min()));
  }
  return d;
}

ParzenDensity ParzenDensity::categorical(std::vector<double> probabilities) {
  ParzenDensity d;
  d.kind_ = Kind::Categorical;
  d.probabilities_ = std::move(probabilities);
  return d;
}

double ParzenDensity::pdf(double x) const {
  if (kind_ == Kind::Categorical) {
    auto i = static_cast<std::size_t>(std::llround(x));
    return i < probabilities_.size() ? probabilities_[i] : 0.0;
  }
  if (x < lo_ || x > hi_) return 0.0;
  double p = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    double z = (x - c.center) / c.bandwidth;
    p += c.weight * kInvSqrt2Pi * std::exp(-0.5 * z * z) / (c.bandwidth * normalizers_[i]);
  }
  return p;
}

double ParzenDensity::log_pdf(double x) const { return std::log(pdf(x)); }

double ParzenDensity::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (kind_ == Kind::Categorical) {
    std::discrete_distribution<std::size_t> pick(probabilities_.begin(), probabilities_.end());
    return static_cast<double>(pick(rng));
  }
  std::vector<double> w;
  for (const auto& c : components_) w.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  const auto& c = components_[pick(rng)];
  // Inverse-CDF draw restricted to [lo, hi], solved by bisection in z.
  double z_lo = (lo_ - c.center) / c.bandwidth;
  double z_hi = (hi_ - c.center) / c.bandwidth;
  const double a = normal_cdf(z_lo);
  const double u = a + (normal_cdf(z_hi) - a) * unit(rng);
  for (int it = 0; it < 80; ++it) {
    double z_mid = 0.5 * (z_lo + z_hi);
    if (normal_cdf(z_mid) < u) z_lo = z_mid;
    else z_hi = z_mid;
  }
  double x = std::clamp(c.center + c.bandwidth * 0.5 * (z_lo + z_hi), lo_, hi_);
  if (quantized_) {
    x = std::round(x);
    x = std::clamp(x, std::ceil(lo_), std::floor(hi_));
  }
  return x;
}

double encode_value(const ParamSpec& spec, const Value& v) {
  if (spec.is_discrete()) {
    auto i = spec.index_of(v);
    if (!i) throw DomainError("value " + format_value(v) + " is outside the domain of " + spec.name);
    return static_cast<double>(*i);
  }
  if (!spec.contains(v)) throw DomainError("value " + format_value(v) + " is outside the domain of " + spec.name);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

Value decode_value(const ParamSpec& spec, double x) {
  if (spec.is_discrete()) return spec.at(static_cast<std::size_t>(std::llround(x)));
  if (std::holds_alternative<UniformInt>(spec.domain)) return static_cast<std::int64_t>(std::llround(x));
  return x;
}

ParzenDensity fit_parzen(std::span<const Value> values, const ParamSpec& spec, double prior_weight) {
  if (!(prior_weight > 0.0)) throw ConfigError("prior_weight must be positive");
  if (spec.is_discrete()) {
    std::vector<double> p(spec.cardinality(), prior_weight);
    for (const auto& v : values) p[static_cast<std::size_t>(encode_value(spec, v))] += 1.0;
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= total;
    return ParzenDensity::categorical(std::move(p));
  }

  const Support s = support_of(spec);
  const double range = s.hi - s.lo;
  const double mid = 0.5 * (s.lo + s.hi);
  std::vector<double> centers;
  for (const auto& v : values) centers.push_back(encode_value(spec, v));

  // Neighbour distances are measured among all centers including the prior's.
  std::vector<double> all = centers;
  all.push_back(mid);
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());

  const double total = static_cast<double>(centers.size()) + prior_weight;
  std::vector<ParzenDensity::Component> comps;
  for (double c : centers) {
    auto pos = std::lower_bound(sorted.begin(), sorted.end(), c);
    double nearest = std::numeric_limits<double>::infinity();
    // `pos` is the first copy of c; a duplicate right after it gives distance 0.
    if (pos != sorted.begin()) nearest = std::min(nearest, c - *(pos - 1));
    if (pos + 1 != sorted.end()) nearest = std::min(nearest, *(pos + 1) - c);
    double bw = std::clamp(std::max(nearest, range / 100.0), range / 100.0, range);
    comps.push_back({c, bw, 1.0 / total});
  }
  comps.push_back({mid, range, prior_weight / total});
  return ParzenDensity::mixture(s.lo, s.hi, std::move(comps), s.quantized);
}

std::size_t best_candidate_index(std::span<const double> candidates, const ParzenDensity& l,
                                 const ParzenDensity& g) {
  if (candidates.empty()) throw Error("no candidates to score");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double score = l.log_pdf(candidates[i]) - g.log_pdf(candidates[i]);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

double score_candidates(std::span<const double> candidates, const ParzenDensity& l,
                        const ParzenDensity& g) {
  return candidates[best_candidate_index(candidates, l, g)];
}

// ---------------------------------------------------------------------------
// suggest / report

namespace {

double propose(const ParzenDensity& l, const ParzenDensity& g, int n_candidates,
               std::mt19937_64& rng) {
  std::vector<double> cands;
  cands.reserve(static_cast<std::size_t>(n_candidates));
  for (int i = 0; i < n_candidates; ++i) cands.push_back(l.sample(rng));
  return score_candidates(cands, l, g);
}

}  // namespace

Suggestion suggest(TrialHistory& history, const SearchSpace& space, const TpeConfig& cfg,
                   std::mt19937_64& rng) {
  if (history.completed_count() < static_cast<std::size_t>(cfg.n_startup)) {
    Configuration c = sample_prior(space, rng);
    return {history.add_pending(c), std::move(c)};
  }

  const ObservationSplit split = split_observations(history, cfg.gamma);
  // Trials whose method left the space (restricted reruns) do not inform it.
  auto methods_of = [&](const std::vector<Trial>& ts) {
    std::vector<Value> out;
    for (const auto& t : ts)
      if (space.has(t.config.method)) out.emplace_back(std::string(to_string(t.config.method)));
    return out;
  };

  const ParamSpec root = space.root_choice();
  const auto good_methods = methods_of(split.good);
  const auto bad_methods = methods_of(split.bad);
  const double m_idx = propose(fit_parzen(good_methods, root, cfg.prior_weight),
                               fit_parzen(bad_methods, root, cfg.prior_weight), cfg.n_candidates, rng);
  const Method method = space.branches()[static_cast<std::size_t>(m_idx)].method;

  Configuration config;
  config.method = method;
  for (const auto& p : space.branch(method).params) {
    auto active_values = [&](const std::vector<Trial>& ts) {
      std::vector<Value> out;
      for (const auto& t : ts) {
        if (t.config.method != method) continue;
        auto it = t.config.assignments.find(p.name);
        if (it != t.config.assignments.end() && p.contains(it->second)) out.push_back(it->second);
      }
      return out;
    };
    const auto good_vals = active_values(split.good);
    const auto bad_vals = active_values(split.bad);
    const double x = propose(fit_parzen(good_vals, p, cfg.prior_weight),
                             fit_parzen(bad_vals, p, cfg.prior_weight), cfg.n_candidates, rng);
    config.assignments.emplace(p.name, decode_value(p, x));
  }
  return {history.add_pending(config), std::move(config)};
}

void report(TrialHistory& history, std::int64_t id, double loss) { history.complete(id, loss); }

void report_failure(TrialHistory& history, std::int64_t id, std::string reason) {
  history.fail(id, std::move(reason));
}

// ---------------------------------------------------------------------------
// AsyncOptimizer / run loops

AsyncOptimizer::AsyncOptimizer(SearchSpace space, TpeConfig cfg)
    : space_(std::move(space)), cfg_(cfg), rng_(cfg.seed) {}

Suggestion AsyncOptimizer::suggest() {
  std::lock_guard lock(mutex_);
  return autonilm::suggest(history_, space_, cfg_, rng_);
}

void AsyncOptimizer::report(std::int64_t id, double loss, std::optional<double> wall_ms) {
  std::lock_guard lock(mutex_);
  history_.complete(id, loss);
  if (wall_ms) history_.set_wall_ms(id, *wall_ms);
}

void AsyncOptimizer::report_failure(std::int64_t id, std::string reason,
                                    std::optional<double> wall_ms) {
  std::lock_guard lock(mutex_);
  history_.fail(id, std::move(reason));
  if (wall_ms) history_.set_wall_ms(id, *wall_ms);
}

TrialHistory AsyncOptimizer::snapshot() const {
  std::lock_guard lock(mutex_);
  return history_;
}

namespace {

struct Outcome {
  std::optional<double> loss;
  std::string failure;
  double wall_ms = 0.0;
};

Outcome evaluate(const Objective& objective, const Configuration& config) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    double loss = objective(config);
    if (std::isfinite(loss)) out.loss = loss;
    else out.failure = "objective returned a non-finite loss";
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

RunResult finish(TrialHistory history) {
  const Trial* best = nullptr;
  for (const auto& t : history.trials())
    if (t.status == TrialStatus::Completed && (!best || *t.loss < *best->loss)) best = &t;
  if (!best) throw Error("every trial failed");
  Trial b = *best;
  return {std::move(b), std::move(history)};
}

}  // namespace

RunResult run_optimization(const Objective& objective, const SearchSpace& space, const TpeConfig& cfg,
                           int budget, RunOptions options) {
  if (budget < 1) throw ConfigError("budget must be at least 1");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (cfg.n_candidates < 1 || cfg.n_startup < 1) throw ConfigError("n_candidates and n_startup must be positive");

  AsyncOptimizer opt(space, cfg);
  auto record = [&](const Suggestion& s, const Outcome& o) {
    std::optional<double> ms;
    if (options.record_timing) ms = o.wall_ms;
    if (o.loss) opt.report(s.id, *o.loss, ms);
    else opt.report_failure(s.id, o.failure, ms);
  };

  if (options.workers <= 1) {
    for (int i = 0; i < budget; ++i) {
      Suggestion s = opt.suggest();
      record(s, evaluate(objective, s.config));
    }
  } else {
    std::atomic<int> claimed{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < options.workers; ++w) {
      pool.emplace_back([&] {
        while (claimed.fetch_add(1) < budget) {
          Suggestion s = opt.suggest();
          record(s, evaluate(objective, s.config));
        }
      });
    }
    pool.clear();
  }
  return finish(opt.snapshot());
}

RunResult run_random_search(const Objective& objective, const SearchSpace& space, std::uint64_t seed,
                            int budget) {
  if (budget < 1) throw ConfigError("budget must be at least 1");
  std::mt19937_64 rng(seed);
  TrialHistory history;
  for (int i = 0; i < budget; ++i) {
    Configuration c = sample_prior(space, rng);
    auto id = history.add_pending(c);
    Outcome o = evaluate(objective, c);
    if (o.loss) history.complete(id, *o.loss);
    else history.fail(id, o.failure);
  }
  return finish(std::move(history));
}

nlohmann::json to_json(const Trial& t) {
  nlohmann::json j = to_json(t.config);
  j["id"] = t.id;
  j["status"] = std::string(to_string(t.status));
  j["loss"] = t.loss ? nlohmann::json(*t.loss) : nlohmann::json(nullptr);
  j["wall_ms"] = t.wall_ms ? nlohmann::json(*t.wall_ms) : nlohmann::json(nullptr);
  if (t.status == TrialStatus::Failed) j["failure"] = t.failure;
  return j;
}

nlohmann::json run_report(const RunResult& result, const TpeConfig& cfg, int budget) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : result.history.trials()) trials.push_back(to_json(t));
  return {{"best", to_json(result.best)},
          {"trials", trials},
          {"seed", cfg.seed},
          {"gamma", cfg.gamma},
          {"budget", budget}};
}

}  // namespace autonilm
