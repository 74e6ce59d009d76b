#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "autonilm/error.hpp"
#include "autonilm/tpe.hpp"

#include "oracles.hpp"

using namespace autonilm;
using namespace oracles;

namespace {

Configuration dt(std::int64_t mss) {
  return {Method::DT, {{"criterion", std::string("MSE")}, {"min_sample_split", mss}}};
}

TrialHistory completed_history(const std::vector<double>& losses) {
  TrialHistory h;
  for (double l : losses) h.complete(h.add_pending(dt(2)), l);
  return h;
}

}  // namespace

TEST_CASE("good set size follows ceil(gamma*sqrt(n)) capped at 25") {
  CHECK(good_count(9, 0.25) == 1);
  CHECK(good_count(100, 0.25) == 3);
  CHECK(good_count(1, 0.25) == 1);
  CHECK(good_count(2, 0.01) == 1);
  CHECK(good_count(10000, 0.9) == 25);
  CHECK(good_count(16, 0.5) == 2);
}

TEST_CASE("split_observations on empty history throws") {
  TrialHistory h;
  CHECK_THROWS_AS(split_observations(h, 0.25), Error);
  h.add_pending(dt(3));
  CHECK_THROWS_AS(split_observations(h, 0.25), Error);
}

TEST_CASE("split_observations with one trial") {
  const auto s = split_observations(completed_history({4.0}), 0.25);
  CHECK(s.good.size() == 1);
  CHECK(s.bad.empty());
}

TEST_CASE("split_observations partitions by loss") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int n : {2, 9, 30, 100, 700}) {
    std::vector<double> losses(n);
    for (auto& l : losses) l = std::round(u(rng));  // ties on purpose
    const auto s = split_observations(completed_history(losses), 0.25);
    CHECK(s.good.size() == good_count(n, 0.25));
    CHECK(s.good.size() + s.bad.size() == static_cast<std::size_t>(n));
    double max_good = -1e300, min_bad = 1e300;
    for (const auto& t : s.good) max_good = std::max(max_good, *t.loss);
    for (const auto& t : s.bad) min_bad = std::min(min_bad, *t.loss);
    if (!s.bad.empty()) CHECK(max_good <= min_bad);
  }
}

TEST_CASE("pending and failed trials are not split") {
  TrialHistory h = completed_history({1.0, 2.0, 3.0});
  h.add_pending(dt(4));
  h.fail(h.add_pending(dt(5)), "boom");
  CHECK(h.completed_count() == 3);
  const auto s = split_observations(h, 0.25);
  CHECK(s.good.size() + s.bad.size() == 3);
}

TEST_CASE("report marks a pending trial completed") {
  TrialHistory h;
  const auto id = h.add_pending(dt(2));
  report(h, id, 3.2);
  CHECK(h.at(id).status == TrialStatus::Completed);
  CHECK(*h.at(id).loss == 3.2);
}

TEST_CASE("report rejects double reports, unknown ids and non-finite losses") {
  TrialHistory h;
  const auto id = h.add_pending(dt(2));
  report(h, id, 1.0);
  CHECK_THROWS_AS(report(h, id, 2.0), Error);
  CHECK_THROWS_AS(report_failure(h, id, "late"), Error);
  CHECK_THROWS_AS(report(h, 99, 1.0), Error);
  const auto id2 = h.add_pending(dt(2));
  CHECK_THROWS_AS(report(h, id2, std::nan("")), Error);
  CHECK(h.at(id2).status == TrialStatus::Pending);
}

TEST_CASE("failed trials carry no loss") {
  TrialHistory h;
  const auto id = h.add_pending(dt(2));
  report_failure(h, id, "diverged");
  CHECK(h.at(id).status == TrialStatus::Failed);
  CHECK_FALSE(h.at(id).loss.has_value());
  CHECK(h.at(id).failure == "diverged");
  CHECK(h.completed_count() == 0);
}

TEST_CASE("categorical Parzen probabilities follow prior plus counts") {
  const ParamSpec loss{"loss", Categorical{{"MSE", "MAE"}}};
  const std::vector<Value> values{std::string("MAE"), std::string("MAE")};
  const ParzenDensity d = fit_parzen(values, loss, 1.0);
  REQUIRE(d.kind() == ParzenDensity::Kind::Categorical);
  CHECK(d.probabilities()[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(d.probabilities()[1] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("categorical densities sum to one") {
  std::mt19937_64 rng(4);
  const ParamSpec seq{"sequence_length", RealSet{{64, 128, 256, 512, 1024}}};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Value> values;
    const int n = static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) values.push_back(sample_value(seq, rng));
    const ParzenDensity d = fit_parzen(values, seq, 0.5 + static_cast<double>(rng() % 4));
    const auto& p = d.probabilities();
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double x : p) CHECK(x > 0.0);
  }
}

TEST_CASE("empty continuous data gives the prior component alone") {
  const ParamSpec p{"dropout", UniformFloat{0.1, 0.6}};
  const ParzenDensity d = fit_parzen(std::vector<Value>{}, p, 1.0);
  REQUIRE(d.components().size() == 1);
  CHECK(d.components()[0].center == doctest::Approx(0.35));
  CHECK(d.components()[0].bandwidth == doctest::Approx(0.5));
  CHECK(d.components()[0].weight == doctest::Approx(1.0));
  CHECK(integrate(d) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("continuous mixtures integrate to one") {
  std::mt19937_64 rng(9);
  const ParamSpec f{"dropout", UniformFloat{0.1, 0.6}};
  const ParamSpec i{"min_sample_split", UniformInt{2, 200}};
  for (int trial = 0; trial < 30; ++trial) {
    for (const ParamSpec* spec : {&f, &i}) {
      std::vector<Value> values;
      const int n = 1 + static_cast<int>(rng() % 30);
      for (int k = 0; k < n; ++k) values.push_back(sample_value(*spec, rng));
      const ParzenDensity d = fit_parzen(values, *spec, 1.0);
      CHECK(std::abs(integrate(d) - 1.0) <= 1e-3);
      double wsum = 0.0;
      for (const auto& c : d.components()) {
        CHECK(c.bandwidth > 0.0);
        CHECK(c.bandwidth <= d.hi() - d.lo() + 1e-12);
        CHECK(c.weight > 0.0);
        wsum += c.weight;
      }
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("integer densities live on the widened support and sample integers") {
  const ParamSpec p{"n_states", UniformInt{2, 4}};
  const ParzenDensity d = fit_parzen(std::vector<Value>{std::int64_t{3}}, p, 1.0);
  CHECK(d.lo() == 1.5);
  CHECK(d.hi() == 4.5);
  CHECK(d.quantized());
  std::mt19937_64 rng(1);
  for (int k = 0; k < 500; ++k) {
    const double x = d.sample(rng);
    CHECK(x == std::round(x));
    CHECK(x >= 2);
    CHECK(x <= 4);
  }
}

TEST_CASE("continuous samples stay inside the support") {
  const ParamSpec p{"dropout", UniformFloat{0.1, 0.6}};
  const ParzenDensity d = fit_parzen(std::vector<Value>{0.1, 0.11, 0.59}, p, 1.0);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 2000; ++k) {
    const double x = d.sample(rng);
    CHECK(x >= 0.1);
    CHECK(x <= 0.6);
  }
}

TEST_CASE("fit_parzen rejects values outside the domain") {
  const ParamSpec p{"min_sample_split", UniformInt{2, 200}};
  CHECK_THROWS_AS(fit_parzen(std::vector<Value>{std::int64_t{1}}, p, 1.0), DomainError);
  const ParamSpec c{"loss", Categorical{{"MSE", "MAE"}}};
  CHECK_THROWS_AS(fit_parzen(std::vector<Value>{std::string("L1")}, c, 1.0), DomainError);
}

TEST_CASE("identical densities select the first candidate") {
  const ParamSpec p{"dropout", UniformFloat{0.1, 0.6}};
  const ParzenDensity l = fit_parzen(std::vector<Value>{0.2, 0.3}, p, 1.0);
  const std::vector<double> cands{0.4, 0.2, 0.3, 0.5};
  CHECK(best_candidate_index(cands, l, l) == 0);
  CHECK(score_candidates(cands, l, l) == 0.4);
}

TEST_CASE("categorical ratio picks the favoured label") {
  const ParzenDensity l = ParzenDensity::categorical({0.9, 0.1});
  const ParzenDensity g = ParzenDensity::categorical({0.1, 0.9});
  const std::vector<double> cands{0.0, 1.0};
  CHECK(score_candidates(cands, l, g) == 0.0);
  const std::vector<double> reversed{1.0, 0.0};
  CHECK(score_candidates(reversed, l, g) == 0.0);
}

TEST_CASE("candidate selection matches exhaustive ratio evaluation") {
  std::mt19937_64 rng(12);
  const ParamSpec p{"dropout", UniformFloat{0.1, 0.6}};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Value> good, bad;
    for (int k = 0; k < 3; ++k) good.push_back(sample_value(p, rng));
    for (int k = 0; k < 12; ++k) bad.push_back(sample_value(p, rng));
    const ParzenDensity l = fit_parzen(good, p, 1.0);
    const ParzenDensity g = fit_parzen(bad, p, 1.0);
    std::vector<double> cands(24);
    for (auto& c : cands) c = l.sample(rng);
    std::size_t oracle = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      const double r = l.pdf(cands[k]) / g.pdf(cands[k]);
      if (r > best) {
        best = r;
        oracle = k;
      }
    }
    CHECK(best_candidate_index(cands, l, g) == oracle);
  }
}

TEST_CASE("suggest on empty history returns a valid configuration") {
  TrialHistory h;
  std::mt19937_64 rng(0);
  const auto s = suggest(h, builtin_space(), TpeConfig{}, rng);
  CHECK(validate_config(builtin_space(), s.config).empty());
  CHECK(h.at(s.id).status == TrialStatus::Pending);
}

TEST_CASE("consecutive suggestions without reports get distinct ids") {
  TrialHistory h = completed_history(std::vector<double>(15, 1.0));
  std::mt19937_64 rng(0);
  const auto a = suggest(h, builtin_space(), TpeConfig{}, rng);
  const auto b = suggest(h, builtin_space(), TpeConfig{}, rng);
  CHECK(a.id != b.id);
  CHECK(h.trials().size() == 17);
}

TEST_CASE("suggest prefers the method with low losses") {
  const SearchSpace space = builtin_space().restricted(std::vector<Method>{Method::DT, Method::CO});
  TrialHistory base;
  std::mt19937_64 init(1);
  for (int k = 0; k < 20; ++k) {
    base.complete(base.add_pending(sample_prior(space, Method::DT, init)), 0.1);
    base.complete(base.add_pending(sample_prior(space, Method::CO, init)), 100.0);
  }
  int dt_count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    TrialHistory h = base;
    std::mt19937_64 rng(seed);
    if (suggest(h, space, TpeConfig{}, rng).config.method == Method::DT) ++dt_count;
  }
  CHECK(dt_count >= 90);
}

TEST_CASE("1000 TPE suggestions all validate and stay within their branch") {
  const SearchSpace space = builtin_space();
  TrialHistory h;
  std::mt19937_64 rng(21);
  std::mt19937_64 loss_rng(22);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int k = 0; k < 1000; ++k) {
    const auto s = suggest(h, space, TpeConfig{}, rng);
    REQUIRE(validate_config(space, s.config).empty());
    for (const auto& [name, _] : s.config.assignments) {
      const auto& params = space.branch(s.config.method).params;
      REQUIRE(std::any_of(params.begin(), params.end(), [&](const ParamSpec& p) { return p.name == name; }));
    }
    if (k % 7 == 3) report_failure(h, s.id, "synthetic failure");
    else report(h, s.id, u(loss_rng));
  }
}

TEST_CASE("constant objective") {
  const RunResult r = run_optimization([](const Configuration&) { return 1.0; }, builtin_space(), TpeConfig{}, 5);
  CHECK(*r.best.loss == 1.0);
  CHECK(r.history.trials().size() == 5);
  CHECK(r.history.completed_count() == 5);
}

TEST_CASE("quadratic objective converges near its minimum") {
  TpeConfig cfg;
  cfg.seed = 0;
  const RunResult r = run_optimization(quadratic, dt_space(), cfg, 60);
  const auto mss = r.best.config.integer("min_sample_split");
  CHECK(mss >= 35);
  CHECK(mss <= 65);
}

TEST_CASE("best-so-far is non-increasing and completed count never decreases") {
  TpeConfig cfg;
  cfg.seed = 3;
  const RunResult r = run_optimization(quadratic, dt_space(), cfg, 40);
  double best = 1e300;
  std::size_t completed = 0;
  for (const auto& t : r.history.trials()) {
    REQUIRE(t.status == TrialStatus::Completed);
    ++completed;
    const double next = std::min(best, *t.loss);
    CHECK(next <= best);
    best = next;
  }
  CHECK(completed == 40);
  CHECK(best == *r.best.loss);
}

TEST_CASE("TPE is no worse than random search on the quadratic") {
  std::vector<double> tpe, rnd;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TpeConfig cfg;
    cfg.seed = seed;
    tpe.push_back(*run_optimization(quadratic, dt_space(), cfg, 50).best.loss);
    rnd.push_back(*run_random_search(quadratic, dt_space(), seed, 50).best.loss);
  }
  CHECK(median(tpe) <= median(rnd));
}

TEST_CASE("objective failures become failed trials") {
  int calls = 0;
  const Objective flaky = [&](const Configuration&) -> double {
    if (++calls % 2 == 0) throw std::runtime_error("flaky");
    return 2.0;
  };
  const RunResult r = run_optimization(flaky, dt_space(), TpeConfig{}, 6);
  CHECK(r.history.completed_count() == 3);
  std::size_t failed = 0;
  for (const auto& t : r.history.trials())
    if (t.status == TrialStatus::Failed) {
      ++failed;
      CHECK(t.failure.find("flaky") != std::string::npos);
    }
  CHECK(failed == 3);
  const Objective nan_loss = [](const Configuration&) { return std::nan(""); };
  CHECK_THROWS_AS(run_optimization(nan_loss, dt_space(), TpeConfig{}, 3), Error);
}

TEST_CASE("every trial failing aborts the run") {
  const Objective bad = [](const Configuration&) -> double { throw std::runtime_error("no"); };
  CHECK_THROWS_AS(run_optimization(bad, dt_space(), TpeConfig{}, 4), Error);
}

TEST_CASE("sequential runs are reproducible") {
  TpeConfig cfg;
  cfg.seed = 8;
  const RunResult a = run_optimization(quadratic, builtin_space(), cfg, 25);
  const RunResult b = run_optimization(quadratic, builtin_space(), cfg, 25);
  CHECK(run_report(a, cfg, 25).dump() == run_report(b, cfg, 25).dump());
}

TEST_CASE("concurrent workers complete the whole budget") {
  TpeConfig cfg;
  cfg.seed = 1;
  const RunResult r = run_optimization(quadratic, dt_space(), cfg, 40, RunOptions{4, true});
  CHECK(r.history.completed_count() == 40);
  std::vector<std::int64_t> ids;
  for (const auto& t : r.history.trials()) {
    ids.push_back(t.id);
    CHECK(t.wall_ms.has_value());
  }
  std::sort(ids.begin(), ids.end());
  for (std::size_t k = 0; k < ids.size(); ++k) CHECK(ids[k] == static_cast<std::int64_t>(k));
}

TEST_CASE("run report layout") {
  TpeConfig cfg;
  const RunResult r = run_optimization([](const Configuration&) { return 1.5; }, dt_space(), cfg, 3);
  const nlohmann::json j = run_report(r, cfg, 3);
  CHECK(j.at("budget") == 3);
  CHECK(j.at("gamma") == 0.25);
  CHECK(j.at("seed") == 0);
  CHECK(j.at("best").at("loss") == 1.5);
  REQUIRE(j.at("trials").size() == 3);
  for (const auto& t : j["trials"]) {
    CHECK(t.contains("id"));
    CHECK(t.at("method") == "DT");
    CHECK(t.contains("assignments"));
    CHECK(t.at("status") == "completed");
    CHECK(t.at("wall_ms").is_null());
  }
}

TEST_CASE("async optimizer serves interleaved suggest and report") {
  AsyncOptimizer opt(dt_space(), TpeConfig{});
  const auto a = opt.suggest();
  const auto b = opt.suggest();
  opt.report(b.id, 4.0);
  opt.report_failure(a.id, "lost");
  const TrialHistory h = opt.snapshot();
  CHECK(h.at(a.id).status == TrialStatus::Failed);
  CHECK(h.at(b.id).status == TrialStatus::Completed);
  CHECK_THROWS_AS(opt.report(a.id, 1.0), Error);
}
