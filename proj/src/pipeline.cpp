#include "autonilm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "autonilm/error.hpp"

namespace autonilm {

std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::Standardize: return "standardize";
    case StepKind::Window: return "window";
    case StepKind::Resample: return "resample";
  }
  return "?";
}

std::optional<StepKind> parse_step_kind(std::string_view s) {
  if (s == "standardize") return StepKind::Standardize;
  if (s == "window") return StepKind::Window;
  if (s == "resample") return StepKind::Resample;
  return std::nullopt;
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Warning: return "warning";
    case Severity::AutoFixed: return "auto-fixed";
    case Severity::Error: return "error";
  }
  return "?";
}

bool PipelineValidation::has_errors() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

namespace {

std::optional<std::size_t> find_step(const std::vector<PipelineStep>& steps, StepKind k) {
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (steps[i].kind == k) return i;
  return std::nullopt;
}

std::string describe(const PipelineStep& s) {
  std::string out(to_string(s.kind));
  if (s.value) {
    std::ostringstream os;
    os << *s.value;
    out += "(" + os.str() + ")";
  }
  return out;
}

void apply_change(std::vector<PipelineStep>& steps, const PipelineChange& c) {
  switch (c.op) {
    case PipelineChange::Op::Insert:
      steps.insert(steps.begin() + static_cast<std::ptrdiff_t>(c.index), c.step);
      break;
    case PipelineChange::Op::Move: {
      PipelineStep s = steps[c.from];
      steps.erase(steps.begin() + static_cast<std::ptrdiff_t>(c.from));
      steps.insert(steps.begin() + static_cast<std::ptrdiff_t>(c.index), s);
      break;
    }
    case PipelineChange::Op::Replace:
      steps[c.index] = c.step;
      break;
  }
}

// Domain values the R2/R4/R5 rules own; R0 leaves them alone.
bool owned_by_rule(const Configuration& c, const std::string& param) {
  if (param != "dropout" && param != "min_sample_split" && param != "learning_rate") return false;
  return !std::holds_alternative<std::string>(c.assignments.at(param));
}

}  // namespace

PipelineValidation validate_pipeline(const PipelineDescription& p, const SearchSpace& space) {
  PipelineValidation out{p, {}};
  const bool automl = p.automl_mode;
  auto& diags = out.diagnostics;

  // Preconditions: a structurally valid configuration and duplicate-free steps.
  std::set<StepKind> kinds;
  for (const auto& s : p.steps)
    if (!kinds.insert(s.kind).second)
      diags.push_back({"P0", Severity::Error, "step '" + std::string(to_string(s.kind)) + "' appears more than once", {}});
  for (const auto& v : validate_config(space, p.config))
    if (!(v.kind == Violation::Kind::OutOfDomain && owned_by_rule(p.config, v.param)))
      diags.push_back({"R0", Severity::Error, v.message, {}});
  if (!diags.empty()) return out;

  auto violation = [&](const std::string& rule, const std::string& message) {
    diags.push_back({rule, automl ? Severity::Error : Severity::Warning, message, {}});
  };
  auto fixable = [&](const std::string& rule, const std::string& message, std::optional<PipelineChange> change) {
    if (!automl || !change) {
      diags.push_back({rule, Severity::Warning, message, {}});
      return;
    }
    apply_change(out.pipeline.steps, *change);
    diags.push_back({rule, Severity::AutoFixed, message, std::move(change)});
  };

  const auto& a = p.config.assignments;
  if (a.contains("min_sample_split") && p.config.number("min_sample_split") < 2)
    violation("R4", "min_sample_split must be at least 2");
  if (a.contains("dropout")) {
    const double d = p.config.number("dropout");
    if (!(d >= 0.1 && d <= 0.6)) violation("R2", "dropout must lie in [0.1, 0.6]");
  }
  if (a.contains("learning_rate")) {
    const ParamSpec lr{"learning_rate", RealSet{{1e-2, 1e-3, 1e-4, 1e-5}}};
    if (!lr.contains(a.at("learning_rate"))) violation("R5", "learning_rate must be one of 1e-2, 1e-3, 1e-4, 1e-5");
  }

  if (is_neural(p.method())) {
    auto& steps = out.pipeline.steps;
    const double seq = p.config.number("sequence_length");
    const PipelineStep window{StepKind::Window, seq};
    if (auto w = find_step(steps, StepKind::Window); !w) {
      fixable("R3", std::string(to_string(p.method())) + " needs a window step of length " + describe(window),
              PipelineChange{PipelineChange::Op::Insert, steps.size(), 0, window, std::nullopt,
                             "appended " + describe(window)});
    } else if (steps[*w].value != window.value) {
      fixable("R3", "window length differs from sequence_length",
              PipelineChange{PipelineChange::Op::Replace, *w, 0, window, steps[*w],
                             "replaced " + describe(steps[*w]) + " with " + describe(window)});
    }

    const PipelineStep standardize{StepKind::Standardize, std::nullopt};
    const auto w = find_step(steps, StepKind::Window);
    const std::size_t target = w ? *w : steps.size();
    if (auto s = find_step(steps, StepKind::Standardize); !s) {
      fixable("R1", std::string(to_string(p.method())) + " requires standardized inputs",
              PipelineChange{PipelineChange::Op::Insert, target, 0, standardize, std::nullopt,
                             "inserted standardize at position " + std::to_string(target)});
    } else if (w && *s > *w) {
      fixable("R1", "standardize must precede the window step",
              PipelineChange{PipelineChange::Op::Move, *w, *s, steps[*s], std::nullopt,
                             "moved standardize from position " + std::to_string(*s) + " to " + std::to_string(*w)});
    }
  }
  return out;
}

PipelineDescription revert_changes(PipelineDescription p, const std::vector<Diagnostic>& diagnostics) {
  for (auto it = diagnostics.rbegin(); it != diagnostics.rend(); ++it) {
    if (!it->applied_change) continue;
    const auto& c = *it->applied_change;
    auto& steps = p.steps;
    switch (c.op) {
      case PipelineChange::Op::Insert:
        steps.erase(steps.begin() + static_cast<std::ptrdiff_t>(c.index));
        break;
      case PipelineChange::Op::Move: {
        PipelineStep s = steps[c.index];
        steps.erase(steps.begin() + static_cast<std::ptrdiff_t>(c.index));
        steps.insert(steps.begin() + static_cast<std::ptrdiff_t>(c.from), s);
        break;
      }
      case PipelineChange::Op::Replace:
        steps[c.index] = *c.previous;
        break;
    }
  }
  return p;
}

nlohmann::json to_json(const PipelineDescription& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : p.steps) {
    nlohmann::json js = {{"step", std::string(to_string(s.kind))}};
    if (s.value) js[s.kind == StepKind::Resample ? "rate" : "length"] = *s.value;
    steps.push_back(js);
  }
  nlohmann::json config = to_json(p.config);
  return {{"method", config["method"]}, {"config", config}, {"steps", steps}, {"automl_mode", p.automl_mode}};
}

PipelineDescription pipeline_from_json(const nlohmann::json& j) {
  try {
    PipelineDescription p;
    nlohmann::json config = j.value("config", nlohmann::json::object());
    if (!config.contains("method")) config["method"] = j.at("method");
    else if (j.contains("method") && j["method"] != config["method"])
      throw ConfigError("pipeline method and configuration method disagree");
    p.config = config_from_json(config);
    for (const auto& js : j.value("steps", nlohmann::json::array())) {
      auto label = js.at("step").get<std::string>();
      auto kind = parse_step_kind(label);
      if (!kind) throw ConfigError("unknown pipeline step '" + label + "'");
      PipelineStep s{*kind, std::nullopt};
      if (js.contains("length")) s.value = js["length"].get<double>();
      else if (js.contains("rate")) s.value = js["rate"].get<double>();
      p.steps.push_back(s);
    }
    p.automl_mode = j.value("automl_mode", false);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pipeline description: ") + e.what());
  }
}

nlohmann::json to_json(const Diagnostic& d) {
  nlohmann::json j = {{"rule", d.rule}, {"severity", std::string(to_string(d.severity))}, {"message", d.message}};
  if (d.applied_change) {
    const auto& c = *d.applied_change;
    static constexpr const char* ops[] = {"insert", "move", "replace"};
    j["applied_change"] = {{"op", ops[static_cast<int>(c.op)]},
                           {"index", c.index},
                           {"description", c.description}};
    if (c.op == PipelineChange::Op::Move) j["applied_change"]["from"] = c.from;
  } else {
    j["applied_change"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const std::vector<Diagnostic>& ds) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : ds) out.push_back(to_json(d));
  return out;
}

}  // namespace autonilm
