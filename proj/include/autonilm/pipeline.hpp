#pragma once

// Constraint checks on an ML pipeline description. In manual mode every
// violation is a warning and the pipeline is returned untouched; in AutoML
// mode fixable violations are repaired (and reported as auto-fixed) while
// out-of-domain values are errors.
//
// Rules:
//   R0  configuration structure (method known, keys match its branch)
//   R1  neural methods need a standardize step before the window step
//   R2  dropout within [0.1, 0.6]
//   R3  neural methods need a window step of the configured sequence_length
//   R4  min_sample_split >= 2
//   R5  learning_rate within {1e-2, 1e-3, 1e-4, 1e-5}
//   P0  steps are duplicate-free

#include <optional>
#include <string>
#include <vector>

#include "autonilm/searchspace.hpp"
#include "json.hpp"

namespace autonilm {

enum class StepKind { Standardize, Window, Resample };

std::string_view to_string(StepKind k);
std::optional<StepKind> parse_step_kind(std::string_view s);

struct PipelineStep {
  StepKind kind;
  std::optional<double> value;  // window length or resample rate

  bool operator==(const PipelineStep&) const = default;
};

struct PipelineDescription {
  Configuration config;  // config.method is the pipeline's method
  std::vector<PipelineStep> steps;
  bool automl_mode = false;

  Method method() const { return config.method; }
  bool operator==(const PipelineDescription&) const = default;
};

enum class Severity { Warning, AutoFixed, Error };
std::string_view to_string(Severity s);

struct PipelineChange {
  enum class Op { Insert, Move, Replace };
  Op op;
  std::size_t index;     // position after the change
  std::size_t from = 0;  // Move: position before the change
  PipelineStep step;
  std::optional<PipelineStep> previous;  // Replace: the overwritten step
  std::string description;
};

struct Diagnostic {
  std::string rule;
  Severity severity;
  std::string message;
  std::optional<PipelineChange> applied_change;  // present iff AutoFixed
};

struct PipelineValidation {
  PipelineDescription pipeline;
  std::vector<Diagnostic> diagnostics;

  bool has_errors() const;
};

PipelineValidation validate_pipeline(const PipelineDescription& p, const SearchSpace& space = builtin_space());

/// Undoes the auto-fixed changes of `diagnostics`, newest first.
PipelineDescription revert_changes(PipelineDescription p, const std::vector<Diagnostic>& diagnostics);

nlohmann::json to_json(const PipelineDescription& p);
PipelineDescription pipeline_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Diagnostic& d);
nlohmann::json to_json(const std::vector<Diagnostic>& ds);

}  // namespace autonilm
