#include "autonilm/searchspace.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "autonilm/error.hpp"

namespace autonilm {

namespace {

bool same_real(double a, double b) {
  return a == b || std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

std::optional<double> as_number(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

void check_spec(const ParamSpec& p, Method m) {
  const std::string where = std::string(to_string(m)) + "." + p.name;
  if (p.name.empty()) throw ConfigError("parameter of " + std::string(to_string(m)) + " has an empty name");
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Categorical>) {
          if (d.labels.empty()) throw ConfigError(where + ": empty categorical domain");
          std::set<std::string> seen(d.labels.begin(), d.labels.end());
          if (seen.size() != d.labels.size()) throw ConfigError(where + ": duplicate labels");
        } else if constexpr (std::is_same_v<D, RealSet>) {
          if (d.values.empty()) throw ConfigError(where + ": empty value set");
          for (std::size_t i = 0; i < d.values.size(); ++i) {
            if (!std::isfinite(d.values[i])) throw ConfigError(where + ": non-finite value");
            for (std::size_t j = 0; j < i; ++j)
              if (same_real(d.values[i], d.values[j])) throw ConfigError(where + ": duplicate values");
          }
        } else {
          if (!(d.lo < d.hi)) throw ConfigError(where + ": requires lo < hi");
        }
      },
      p.domain);
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::DT: return "DT";
    case Method::RF: return "RF";
    case Method::GRU: return "GRU";
    case Method::LSTM: return "LSTM";
    case Method::FCNN: return "FCNN";
    case Method::DAE: return "DAE";
    case Method::FHMM: return "FHMM";
    case Method::CO: return "CO";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view label) {
  for (Method m : kAllMethods)
    if (to_string(m) == label) return m;
  return std::nullopt;
}

bool is_neural(Method m) {
  return m == Method::FCNN || m == Method::GRU || m == Method::LSTM || m == Method::DAE;
}

bool is_external(Method m) {
  return m == Method::GRU || m == Method::LSTM || m == Method::DAE;
}

std::size_t ParamSpec::cardinality() const {
  if (const auto* c = std::get_if<Categorical>(&domain)) return c->labels.size();
  if (const auto* s = std::get_if<RealSet>(&domain)) return s->values.size();
  return 0;
}

std::optional<std::size_t> ParamSpec::index_of(const Value& v) const {
  if (const auto* c = std::get_if<Categorical>(&domain)) {
    const auto* s = std::get_if<std::string>(&v);
    if (!s) return std::nullopt;
    auto it = std::find(c->labels.begin(), c->labels.end(), *s);
    if (it == c->labels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - c->labels.begin());
  }
  if (const auto* r = std::get_if<RealSet>(&domain)) {
    auto x = as_number(v);
    if (!x) return std::nullopt;
    for (std::size_t i = 0; i < r->values.size(); ++i)
      if (same_real(r->values[i], *x)) return i;
  }
  return std::nullopt;
}

Value ParamSpec::at(std::size_t index) const {
  if (const auto* c = std::get_if<Categorical>(&domain)) return c->labels.at(index);
  if (const auto* r = std::get_if<RealSet>(&domain)) return r->values.at(index);
  throw DomainError(name + ": not a discrete domain");
}

bool ParamSpec::contains(const Value& v) const {
  if (is_discrete()) return index_of(v).has_value();
  if (const auto* u = std::get_if<UniformInt>(&domain)) {
    const auto* i = std::get_if<std::int64_t>(&v);
    return i && u->lo <= *i && *i <= u->hi;
  }
  const auto& f = std::get<UniformFloat>(domain);
  auto x = as_number(v);
  return x && std::isfinite(*x) && f.lo <= *x && *x <= f.hi;
}

double Configuration::number(const std::string& name) const {
  auto it = assignments.find(name);
  if (it == assignments.end()) throw ConfigError("configuration lacks parameter '" + name + "'");
  auto x = as_number(it->second);
  if (!x) throw ConfigError("parameter '" + name + "' is not numeric");
  return *x;
}

std::int64_t Configuration::integer(const std::string& name) const {
  double x = number(name);
  if (std::floor(x) != x) throw ConfigError("parameter '" + name + "' is not an integer");
  return static_cast<std::int64_t>(x);
}

const std::string& Configuration::label(const std::string& name) const {
  auto it = assignments.find(name);
  if (it == assignments.end()) throw ConfigError("configuration lacks parameter '" + name + "'");
  const auto* s = std::get_if<std::string>(&it->second);
  if (!s) throw ConfigError("parameter '" + name + "' is not a label");
  return *s;
}

SearchSpace::SearchSpace(std::vector<Branch> branches) : branches_(std::move(branches)) {
  if (branches_.empty()) throw ConfigError("search space has no branches");
  std::set<Method> methods;
  for (const auto& b : branches_) {
    if (!methods.insert(b.method).second)
      throw ConfigError("duplicate branch " + std::string(to_string(b.method)));
    std::set<std::string> names;
    for (const auto& p : b.params) {
      check_spec(p, b.method);
      if (!names.insert(p.name).second)
        throw ConfigError("duplicate parameter " + p.name + " in branch " + std::string(to_string(b.method)));
    }
  }
}

std::vector<Method> SearchSpace::methods() const {
  std::vector<Method> out;
  for (const auto& b : branches_) out.push_back(b.method);
  return out;
}

bool SearchSpace::has(Method m) const {
  return std::any_of(branches_.begin(), branches_.end(), [m](const Branch& b) { return b.method == m; });
}

const Branch& SearchSpace::branch(Method m) const {
  for (const auto& b : branches_)
    if (b.method == m) return b;
  throw ConfigError("method " + std::string(to_string(m)) + " is not part of the search space");
}

ParamSpec SearchSpace::root_choice() const {
  Categorical c;
  for (const auto& b : branches_) c.labels.emplace_back(to_string(b.method));
  return ParamSpec{"method", c};
}

SearchSpace SearchSpace::restricted(std::span<const Method> keep) const {
  std::vector<Branch> out;
  for (const auto& b : branches_)
    if (std::find(keep.begin(), keep.end(), b.method) != keep.end()) out.push_back(b);
  return SearchSpace(std::move(out));
}

SearchSpace builtin_space() {
  const ParamSpec criterion{"criterion", Categorical{{"MSE", "Friedman_MSE", "MAE"}}};
  const ParamSpec min_split{"min_sample_split", UniformInt{2, 200}};
  const ParamSpec n_estimators{"n_estimators", UniformInt{5, 100}};
  const std::vector<ParamSpec> neural{
      {"optimizer", Categorical{{"Adam", "Nadam", "RMSprop"}}},
      {"learning_rate", RealSet{{1e-2, 1e-3, 1e-4, 1e-5}}},
      {"loss", Categorical{{"MSE", "MAE"}}},
      {"n_layers", UniformInt{5, 8}},
      {"dropout", UniformFloat{0.1, 0.6}},
      {"sequence_length", RealSet{{64, 128, 256, 512, 1024}}},
  };
  const ParamSpec n_states{"n_states", UniformInt{2, 4}};

  return SearchSpace({
      {Method::DT, {criterion, min_split}},
      {Method::RF, {criterion, min_split, n_estimators}},
      {Method::GRU, neural},
      {Method::LSTM, neural},
      {Method::FCNN, neural},
      {Method::DAE, neural},
      {Method::FHMM, {n_states}},
      {Method::CO, {n_states}},
  });
}

Value sample_value(const ParamSpec& spec, std::mt19937_64& rng) {
  if (spec.is_discrete()) {
    std::uniform_int_distribution<std::size_t> pick(0, spec.cardinality() - 1);
    return spec.at(pick(rng));
  }
  if (const auto* u = std::get_if<UniformInt>(&spec.domain)) {
    std::uniform_int_distribution<std::int64_t> d(u->lo, u->hi);
    return d(rng);
  }
  const auto& f = std::get<UniformFloat>(spec.domain);
  std::uniform_real_distribution<double> d(f.lo, f.hi);
  double v = d(rng);
  if (v >= f.hi) v = std::nextafter(f.hi, f.lo);
  return v;
}

Configuration sample_prior(const SearchSpace& space, Method method, std::mt19937_64& rng) {
  Configuration c;
  c.method = method;
  for (const auto& p : space.branch(method).params) c.assignments.emplace(p.name, sample_value(p, rng));
  return c;
}

Configuration sample_prior(const SearchSpace& space, std::mt19937_64& rng) {
  const auto& bs = space.branches();
  std::uniform_int_distribution<std::size_t> pick(0, bs.size() - 1);
  return sample_prior(space, bs[pick(rng)].method, rng);
}

std::vector<Violation> validate_config(const SearchSpace& space, const Configuration& config) {
  std::vector<Violation> out;
  if (!space.has(config.method)) {
    out.push_back({Violation::Kind::UnknownMethod, "",
                   "method " + std::string(to_string(config.method)) + " is not in the search space"});
    return out;
  }
  const auto& branch = space.branch(config.method);
  for (const auto& p : branch.params) {
    auto it = config.assignments.find(p.name);
    if (it == config.assignments.end()) {
      out.push_back({Violation::Kind::Missing, p.name, "missing parameter " + p.name});
    } else if (!p.contains(it->second)) {
      out.push_back({Violation::Kind::OutOfDomain, p.name,
                     "value " + format_value(it->second) + " of " + p.name + " is outside its domain"});
    }
  }
  for (const auto& [name, value] : config.assignments) {
    bool active = std::any_of(branch.params.begin(), branch.params.end(),
                              [&](const ParamSpec& p) { return p.name == name; });
    if (!active)
      out.push_back({Violation::Kind::Inactive, name,
                     "parameter " + name + " is not active under " + std::string(to_string(config.method))});
  }
  return out;
}

std::string format_value(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  std::ostringstream os;
  os << std::get<double>(v);
  return os.str();
}

nlohmann::json to_json(const Value& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

nlohmann::json to_json(const Configuration& config) {
  nlohmann::json a = nlohmann::json::object();
  for (const auto& [k, v] : config.assignments) a[k] = to_json(v);
  return {{"method", std::string(to_string(config.method))}, {"assignments", a}};
}

Configuration config_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("method") || !j["method"].is_string())
    throw ConfigError("configuration must be an object with a string 'method'");
  auto m = parse_method(j["method"].get<std::string>());
  if (!m) throw ConfigError("unknown method label '" + j["method"].get<std::string>() + "'");
  Configuration c;
  c.method = *m;
  if (j.contains("assignments")) {
    if (!j["assignments"].is_object()) throw ConfigError("'assignments' must be an object");
    for (const auto& [k, v] : j["assignments"].items()) {
      if (v.is_string()) c.assignments[k] = v.get<std::string>();
      else if (v.is_number_integer()) c.assignments[k] = v.get<std::int64_t>();
      else if (v.is_number()) c.assignments[k] = v.get<double>();
      else throw ConfigError("parameter '" + k + "' has an unsupported JSON type");
    }
  }
  return c;
}

nlohmann::json to_json(const SearchSpace& space) {
  nlohmann::json root = nlohmann::json::array();
  for (const auto& b : space.branches()) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : b.params) {
      nlohmann::json jp = {{"name", p.name}};
      std::visit(
          [&](const auto& d) {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Categorical>) {
              jp["kind"] = "cat";
              jp["values"] = d.labels;
            } else if constexpr (std::is_same_v<D, UniformInt>) {
              jp["kind"] = "int";
              jp["lo"] = d.lo;
              jp["hi"] = d.hi;
            } else if constexpr (std::is_same_v<D, UniformFloat>) {
              jp["kind"] = "float";
              jp["lo"] = d.lo;
              jp["hi"] = d.hi;
            } else {
              jp["kind"] = "set";
              jp["values"] = d.values;
            }
          },
          p.domain);
      params.push_back(std::move(jp));
    }
    root.push_back({{"method", std::string(to_string(b.method))}, {"params", params}});
  }
  return {{"root", root}};
}

SearchSpace space_from_json(const nlohmann::json& j) {
  try {
    std::vector<Branch> branches;
    for (const auto& jb : j.at("root")) {
      auto label = jb.at("method").get<std::string>();
      auto m = parse_method(label);
      if (!m) throw ConfigError("unknown method label '" + label + "'");
      Branch b{*m, {}};
      for (const auto& jp : jb.value("params", nlohmann::json::array())) {
        ParamSpec p;
        p.name = jp.at("name").get<std::string>();
        auto kind = jp.at("kind").get<std::string>();
        if (kind == "cat") p.domain = Categorical{jp.at("values").get<std::vector<std::string>>()};
        else if (kind == "int") p.domain = UniformInt{jp.at("lo").get<std::int64_t>(), jp.at("hi").get<std::int64_t>()};
        else if (kind == "float") p.domain = UniformFloat{jp.at("lo").get<double>(), jp.at("hi").get<double>()};
        else if (kind == "set") p.domain = RealSet{jp.at("values").get<std::vector<double>>()};
        else throw ConfigError("unknown parameter kind '" + kind + "' for " + p.name);
        b.params.push_back(std::move(p));
      }
      branches.push_back(std::move(b));
    }
    return SearchSpace(std::move(branches));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed search-space document: ") + e.what());
  }
}

}  // namespace autonilm
