#pragma once

// Tree-structured conditional search space: a root choice over method labels,
// each label activating its own list of typed hyper-parameters.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace autonilm {

enum class Method { DT, RF, GRU, LSTM, FCNN, DAE, FHMM, CO };

inline constexpr Method kAllMethods[] = {Method::DT,   Method::RF,  Method::GRU,
                                         Method::LSTM, Method::FCNN, Method::DAE,
                                         Method::FHMM, Method::CO};

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view label);

/// Neural-network family (FCNN, GRU, LSTM, DAE).
bool is_neural(Method m);
/// Branches that have no native trainer and go through an external objective.
bool is_external(Method m);

struct Categorical {
  std::vector<std::string> labels;
  bool operator==(const Categorical&) const = default;
};
struct UniformInt {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // inclusive
  bool operator==(const UniformInt&) const = default;
};
struct UniformFloat {
  double lo = 0.0;
  double hi = 0.0;  // sampling is half-open [lo, hi)
  bool operator==(const UniformFloat&) const = default;
};
struct RealSet {
  std::vector<double> values;
  bool operator==(const RealSet&) const = default;
};

using Domain = std::variant<Categorical, UniformInt, UniformFloat, RealSet>;

/// A parameter value. Categorical -> string, UniformInt -> int64,
/// UniformFloat and RealSet -> double.
using Value = std::variant<std::string, std::int64_t, double>;

struct ParamSpec {
  std::string name;
  Domain domain;

  bool operator==(const ParamSpec&) const = default;

  bool is_discrete() const {
    return std::holds_alternative<Categorical>(domain) ||
           std::holds_alternative<RealSet>(domain);
  }
  /// Number of labels for discrete domains, 0 otherwise.
  std::size_t cardinality() const;
  bool contains(const Value& v) const;
  /// Index of `v` within a discrete domain; nullopt if absent.
  std::optional<std::size_t> index_of(const Value& v) const;
  /// Value at `index` of a discrete domain.
  Value at(std::size_t index) const;
};

struct Branch {
  Method method;
  std::vector<ParamSpec> params;
  bool operator==(const Branch&) const = default;
};

struct Configuration {
  Method method = Method::DT;
  std::map<std::string, Value> assignments;

  bool operator==(const Configuration&) const = default;

  double number(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  const std::string& label(const std::string& name) const;
};

struct Violation {
  enum class Kind { UnknownMethod, Missing, Inactive, OutOfDomain };
  Kind kind;
  std::string param;  // empty for UnknownMethod
  std::string message;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  /// Throws ConfigError when an invariant does not hold (duplicate
  /// methods or names, empty lists, lo >= hi).
  explicit SearchSpace(std::vector<Branch> branches);

  const std::vector<Branch>& branches() const { return branches_; }
  std::vector<Method> methods() const;
  bool has(Method m) const;
  /// Throws ConfigError when `m` is not a root label of this space.
  const Branch& branch(Method m) const;

  /// Root choice as a categorical ParamSpec over the method labels.
  ParamSpec root_choice() const;

  /// Copy restricted to the given methods, keeping this space's order.
  SearchSpace restricted(std::span<const Method> keep) const;

  bool operator==(const SearchSpace&) const = default;

 private:
  std::vector<Branch> branches_;
};

SearchSpace builtin_space();

Value sample_value(const ParamSpec& spec, std::mt19937_64& rng);
Configuration sample_prior(const SearchSpace& space, std::mt19937_64& rng);
/// Prior sample with the root choice fixed to `method`.
Configuration sample_prior(const SearchSpace& space, Method method,
                           std::mt19937_64& rng);

/// Empty result means the configuration is valid.
std::vector<Violation> validate_config(const SearchSpace& space,
                                       const Configuration& config);

// JSON mapping for the search-space file and configurations.
nlohmann::json to_json(const SearchSpace& space);
SearchSpace space_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Value& v);
nlohmann::json to_json(const Configuration& config);
/// Values are typed from JSON (string/integer/real); no domain check.
Configuration config_from_json(const nlohmann::json& j);
std::string format_value(const Value& v);

}  // namespace autonilm
