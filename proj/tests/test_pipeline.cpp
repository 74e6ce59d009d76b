#include <doctest.h>

#include <algorithm>
#include <random>

#include "autonilm/error.hpp"
#include "autonilm/pipeline.hpp"

using namespace autonilm;

namespace {

Configuration fcnn(double seq = 128.0) {
  return {Method::FCNN,
          {{"optimizer", std::string("Adam")},
           {"learning_rate", 1e-3},
           {"loss", std::string("MSE")},
           {"n_layers", std::int64_t{5}},
           {"dropout", 0.2},
           {"sequence_length", seq}}};
}

const PipelineStep kStandardize{StepKind::Standardize, std::nullopt};
PipelineStep window(double n) { return {StepKind::Window, n}; }

std::vector<std::string> rules(const PipelineValidation& v) {
  std::vector<std::string> out;
  for (const auto& d : v.diagnostics) out.push_back(d.rule);
  return out;
}

// Random configurations (sometimes pushed out of domain) with random step lists.
PipelineDescription random_pipeline(std::mt19937_64& rng) {
  PipelineDescription p;
  p.config = sample_prior(builtin_space(), rng);
  auto& a = p.config.assignments;
  std::uniform_int_distribution<int> coin(0, 5);
  if (a.contains("dropout") && coin(rng) == 0) a["dropout"] = 0.9;
  if (a.contains("min_sample_split") && coin(rng) == 0) a["min_sample_split"] = std::int64_t{1};
  if (a.contains("learning_rate") && coin(rng) == 0) a["learning_rate"] = 0.3;
  std::vector<PipelineStep> pool{kStandardize, window(std::vector<double>{64, 128, 256, 999}[rng() % 4]),
                                 {StepKind::Resample, 0.05}};
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(rng() % 4);
  p.steps = pool;
  p.automl_mode = coin(rng) % 2 == 0;
  return p;
}

}  // namespace

TEST_CASE("AutoML mode inserts standardization before the window") {
  const PipelineDescription in{fcnn(), {window(128)}, true};
  const PipelineValidation v = validate_pipeline(in);
  CHECK(v.pipeline.steps == std::vector<PipelineStep>{kStandardize, window(128)});
  REQUIRE(v.diagnostics.size() == 1);
  CHECK(v.diagnostics[0].rule == "R1");
  CHECK(v.diagnostics[0].severity == Severity::AutoFixed);
  REQUIRE(v.diagnostics[0].applied_change.has_value());
  CHECK(v.diagnostics[0].applied_change->op == PipelineChange::Op::Insert);
  CHECK(v.diagnostics[0].applied_change->index == 0);
  CHECK_FALSE(v.has_errors());
}

TEST_CASE("manual mode only warns") {
  const PipelineDescription in{fcnn(), {window(128)}, false};
  const PipelineValidation v = validate_pipeline(in);
  CHECK(v.pipeline == in);
  REQUIRE(v.diagnostics.size() == 1);
  CHECK(v.diagnostics[0].rule == "R1");
  CHECK(v.diagnostics[0].severity == Severity::Warning);
  CHECK_FALSE(v.diagnostics[0].applied_change.has_value());
}

TEST_CASE("a valid DT pipeline has no diagnostics") {
  const Configuration c{Method::DT, {{"criterion", std::string("MSE")}, {"min_sample_split", std::int64_t{2}}}};
  for (bool automl : {false, true}) {
    const PipelineDescription in{c, {window(9)}, automl};
    const PipelineValidation v = validate_pipeline(in);
    CHECK(v.diagnostics.empty());
    CHECK(v.pipeline == in);
  }
}

TEST_CASE("missing window is appended with the sequence length") {
  const PipelineDescription in{fcnn(256), {}, true};
  const PipelineValidation v = validate_pipeline(in);
  CHECK(v.pipeline.steps == std::vector<PipelineStep>{kStandardize, window(256)});
  CHECK(rules(v) == std::vector<std::string>{"R3", "R1"});
  const PipelineValidation m = validate_pipeline({fcnn(256), {}, false});
  CHECK(m.pipeline.steps.empty());
  CHECK(rules(m) == std::vector<std::string>{"R3", "R1"});
}

TEST_CASE("wrong window length is replaced") {
  const PipelineDescription in{fcnn(512), {kStandardize, window(64)}, true};
  const PipelineValidation v = validate_pipeline(in);
  CHECK(v.pipeline.steps == std::vector<PipelineStep>{kStandardize, window(512)});
  REQUIRE(v.diagnostics.size() == 1);
  CHECK(v.diagnostics[0].applied_change->op == PipelineChange::Op::Replace);
}

TEST_CASE("standardize after the window is moved in front of it") {
  const PipelineStep rs{StepKind::Resample, 0.05};
  const PipelineDescription in{fcnn(), {rs, window(128), kStandardize}, true};
  const PipelineValidation v = validate_pipeline(in);
  CHECK(v.pipeline.steps == std::vector<PipelineStep>{rs, kStandardize, window(128)});
  REQUIRE(v.diagnostics.size() == 1);
  CHECK(v.diagnostics[0].applied_change->op == PipelineChange::Op::Move);
}

TEST_CASE("every neural method needs standardization") {
  for (Method m : {Method::GRU, Method::LSTM, Method::DAE}) {
    Configuration c = fcnn();
    c.method = m;
    const PipelineValidation v = validate_pipeline({c, {window(128)}, true});
    CHECK(rules(v) == std::vector<std::string>{"R1"});
  }
}

TEST_CASE("domain rules warn in manual mode and fail in AutoML mode") {
  Configuration c = fcnn();
  c.assignments["dropout"] = 0.7;
  c.assignments["learning_rate"] = 0.5;
  const PipelineDescription in{c, {kStandardize, window(128)}, false};
  PipelineValidation v = validate_pipeline(in);
  CHECK(rules(v) == std::vector<std::string>{"R2", "R5"});
  CHECK_FALSE(v.has_errors());
  CHECK(v.pipeline == in);

  PipelineDescription automl = in;
  automl.automl_mode = true;
  v = validate_pipeline(automl);
  CHECK(rules(v) == std::vector<std::string>{"R2", "R5"});
  CHECK(v.has_errors());
  CHECK(v.pipeline == automl);

  const Configuration dt{Method::DT, {{"criterion", std::string("MAE")}, {"min_sample_split", std::int64_t{1}}}};
  v = validate_pipeline({dt, {}, true});
  CHECK(rules(v) == std::vector<std::string>{"R4"});
  CHECK(v.diagnostics[0].severity == Severity::Error);
}

TEST_CASE("structural problems are errors without revision") {
  Configuration c = fcnn();
  c.assignments.erase("loss");
  for (bool automl : {false, true}) {
    const PipelineDescription in{c, {}, automl};
    const PipelineValidation v = validate_pipeline(in);
    REQUIRE_FALSE(v.diagnostics.empty());
    CHECK(v.diagnostics[0].rule == "R0");
    CHECK(v.has_errors());
    CHECK(v.pipeline == in);
  }
  const PipelineValidation d = validate_pipeline({fcnn(), {window(128), window(128)}, true});
  CHECK(rules(d) == std::vector<std::string>{"P0"});
  CHECK(d.has_errors());
}

TEST_CASE("manual mode never changes a pipeline") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 2000; ++k) {
    PipelineDescription p = random_pipeline(rng);
    p.automl_mode = false;
    const PipelineValidation v = validate_pipeline(p);
    REQUIRE(v.pipeline == p);
    for (const auto& d : v.diagnostics) REQUIRE(d.severity != Severity::AutoFixed);
  }
}

TEST_CASE("AutoML fixes are idempotent and revertible") {
  std::mt19937_64 rng(2);
  int fixed = 0;
  for (int k = 0; k < 2000; ++k) {
    PipelineDescription p = random_pipeline(rng);
    p.automl_mode = true;
    const PipelineValidation first = validate_pipeline(p);
    const PipelineValidation second = validate_pipeline(first.pipeline);
    REQUIRE(second.pipeline == first.pipeline);
    for (const auto& d : second.diagnostics) REQUIRE(d.severity != Severity::AutoFixed);
    for (const auto& d : first.diagnostics) {
      REQUIRE(d.applied_change.has_value() == (d.severity == Severity::AutoFixed));
      fixed += d.applied_change.has_value();
    }
    REQUIRE(revert_changes(first.pipeline, first.diagnostics) == p);
  }
  CHECK(fixed > 100);
}

TEST_CASE("pipeline JSON round trip") {
  const PipelineDescription in{fcnn(), {{StepKind::Resample, 0.05}, kStandardize, window(128)}, true};
  const PipelineDescription back = pipeline_from_json(nlohmann::json::parse(to_json(in).dump()));
  CHECK(back.steps == in.steps);
  CHECK(back.automl_mode);
  CHECK(back.method() == Method::FCNN);
  CHECK(validate_config(builtin_space(), back.config).empty());

  const auto j = nlohmann::json::parse(R"({"method":"FCNN","config":{"assignments":{}},"steps":[{"step":"blend"}]})");
  CHECK_THROWS_AS(pipeline_from_json(j), ConfigError);
  const auto k = nlohmann::json::parse(R"({"method":"DT","config":{"method":"CO","assignments":{}}})");
  CHECK_THROWS_AS(pipeline_from_json(k), ConfigError);
}

TEST_CASE("diagnostics JSON") {
  const PipelineValidation v = validate_pipeline({fcnn(), {window(128)}, true});
  const nlohmann::json j = to_json(v.diagnostics);
  REQUIRE(j.size() == 1);
  CHECK(j[0].at("rule") == "R1");
  CHECK(j[0].at("severity") == "auto-fixed");
  CHECK(j[0].at("applied_change").at("op") == "insert");
  const PipelineValidation w = validate_pipeline({fcnn(), {window(128)}, false});
  CHECK(to_json(w.diagnostics)[0].at("severity") == "warning");
  CHECK(to_json(w.diagnostics)[0].at("applied_change").is_null());
}
