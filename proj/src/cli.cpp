#include "autonilm/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "autonilm/error.hpp"
#include "autonilm/harness/benchmark.hpp"
#include "autonilm/harness/metrics.hpp"
#include "autonilm/harness/synth.hpp"
#include "autonilm/pipeline.hpp"

namespace autonilm {

namespace {

struct DataArgs {
  std::string data;
  std::string synth;
  double rate = 0.05;
};

struct SearchArgs {
  std::string appliance;
  int budget = 20;
  std::uint64_t seed = 0;
  double gamma = 0.25;
  int workers = 1;
  std::string out;
  std::string methods;
  std::string space;
  bool timing = false;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write '" + path + "'");
  os << text;
  if (!os) throw DataError("write to '" + path + "' failed");
}

std::shared_ptr<const TimeSeriesDataset> load_data(const DataArgs& a, std::ostream& err) {
  if (a.data.empty() == a.synth.empty()) throw ConfigError("exactly one of --data or --synth is required");
  if (!a.synth.empty()) {
    SynthSpec spec;
    try {
      spec = synth_spec_from_json(read_json(a.synth));
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
    return std::make_shared<const TimeSeriesDataset>(generate_synthetic(spec));
  }
  const std::filesystem::path path(a.data);
  if (std::filesystem::is_directory(path)) {
    if (!(a.rate > 0.0)) throw ConfigError("--rate must be positive");
    ResampleResult r = resample(load_redd(path), a.rate);
    for (const auto& d : r.diagnostics) err << "note: " << d << "\n";
    return std::make_shared<const TimeSeriesDataset>(std::move(r.data));
  }
  if (!std::filesystem::exists(path)) throw DataError("'" + a.data + "' does not exist");
  return std::make_shared<const TimeSeriesDataset>(load_csv(path));
}

std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto m = parse_method(item);
    if (!m) throw ConfigError("unknown method '" + item + "'");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  if (out.empty()) throw ConfigError("--methods lists no method");
  return out;
}

// The default space drops external branches nobody registered; a space the
// user asked for must be fully evaluable.
SearchSpace search_space(const SearchArgs& a, const ExternalRegistry& registry) {
  SearchSpace space = builtin_space();
  bool explicit_space = false;
  if (!a.space.empty()) {
    try {
      space = space_from_json(read_json(a.space));
    } catch (const DataError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("invalid search space: ") + e.what());
    }
    explicit_space = true;
  }
  if (!a.methods.empty()) {
    const auto wanted = parse_methods(a.methods);
    for (Method m : wanted)
      if (!space.has(m)) throw ConfigError("method " + std::string(to_string(m)) + " is not in the search space");
    space = space.restricted(wanted);
    explicit_space = true;
  }
  if (!explicit_space) {
    std::vector<Method> keep;
    for (Method m : space.methods())
      if (!is_external(m) || registry.find(m)) keep.push_back(m);
    space = space.restricted(keep);
  }
  registry.require(space);
  return space;
}

TpeConfig tpe_config(const SearchArgs& a) {
  if (!(a.gamma > 0.0 && a.gamma < 1.0)) throw ConfigError("--gamma must lie in (0, 1)");
  if (a.budget < 1) throw ConfigError("--budget must be at least 1");
  if (a.workers < 1) throw ConfigError("--workers must be at least 1");
  TpeConfig cfg;
  cfg.gamma = a.gamma;
  cfg.seed = a.seed;
  return cfg;
}

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.data, "REDD house directory or CSV file");
  cmd->add_option("--synth", d.synth, "synthetic scenario JSON");
  cmd->add_option("--rate", d.rate, "resampling rate for REDD input, Hz")->capture_default_str();
}

void add_search_options(CLI::App* cmd, SearchArgs& s) {
  cmd->add_option("--budget", s.budget, "number of trials")->capture_default_str();
  cmd->add_option("--seed", s.seed, "random seed")->capture_default_str();
  cmd->add_option("--gamma", s.gamma, "TPE good-set quantile")->capture_default_str();
  cmd->add_option("--workers", s.workers, "concurrent trial evaluations")->capture_default_str();
  cmd->add_option("--out", s.out, "report file (default: standard output)");
  cmd->add_option("--methods", s.methods, "comma-separated method labels");
  cmd->add_flag("--timing", s.timing, "record wall-clock times in the report");
}

void emit(const std::string& path, const nlohmann::json& j, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) out << text;
  else write_text(path, text);
}

int cmd_search(const DataArgs& d, const SearchArgs& s, std::ostream& out, std::ostream& err) {
  const TpeConfig cfg = tpe_config(s);
  HarnessOptions harness;
  harness.external = ExternalRegistry::from_environment();
  harness.dataset_ref = d.data.empty() ? d.synth : d.data;
  harness.seed = s.seed;
  const SearchSpace space = search_space(s, harness.external);
  auto data = load_data(d, err);
  const Objective objective = objective_for(data, s.appliance, SplitSpec{}, harness);
  const RunResult result = run_optimization(objective, space, cfg, s.budget, {s.workers, s.timing});
  emit(s.out, run_report(result, cfg, s.budget), out);
  if (!s.out.empty()) {
    out << "best " << to_string(result.best.config.method);
    for (const auto& [k, v] : result.best.config.assignments) out << " " << k << "=" << format_value(v);
    out << " loss=" << *result.best.loss << "\n";
  }
  return kExitOk;
}

int cmd_evaluate(const DataArgs& d, const std::string& config_path, const std::string& out_path, std::uint64_t seed,
                 std::ostream& out, std::ostream& err) {
  Configuration config;
  try {
    config = config_from_json(read_json(config_path));
  } catch (const DataError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  auto data = load_data(d, err);
  HarnessOptions harness;
  harness.seed = seed;
  const SplitSpec split;
  const std::size_t train_end = split.train_end(*data);
  const TimeRange test{train_end, data->size()};
  const auto names = data->appliance_names();
  const Predictions p = fit_and_predict(*data, config, names, {0, train_end}, test, harness);
  nlohmann::json per = nlohmann::json::object();
  std::vector<std::vector<double>> truths;
  double total = 0.0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& v = data->appliance(names[i]).values;
    truths.emplace_back(v.begin() + static_cast<std::ptrdiff_t>(test.begin), v.end());
    const double e = mae(p.values[i], truths.back());
    per[names[i]] = e;
    total += e;
  }
  const std::vector<double> mains(data->mains.begin() + static_cast<std::ptrdiff_t>(test.begin), data->mains.end());
  nlohmann::json j = {{"config", to_json(config)},
                      {"appliance_mae", per},
                      {"average_mae", total / static_cast<double>(names.size())},
                      {"accuracy", disaggregation_accuracy(p.values, truths, mains)}};
  emit(out_path, j, out);
  return kExitOk;
}

int cmd_benchmark(const DataArgs& d, const SearchArgs& s, std::ostream& out, std::ostream& err) {
  BenchmarkOptions opt;
  opt.tpe = tpe_config(s);
  opt.budget = s.budget;
  opt.run = {s.workers, s.timing};
  opt.harness.seed = s.seed;
  if (!s.methods.empty()) opt.methods = parse_methods(s.methods);
  auto data = load_data(d, err);
  const BenchmarkReport report = run_benchmark(data, opt);
  nlohmann::json j = to_json(report, s.timing);
  j["seed"] = s.seed;
  j["budget"] = s.budget;
  emit(s.out, j, out);
  if (!s.out.empty()) out << format_table(report);
  else err << format_table(report);
  return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path, std::ostream& out) {
  SynthSpec spec = default_synth_spec();
  if (!spec_path.empty()) {
    try {
      spec = synth_spec_from_json(read_json(spec_path));
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
  }
  const TimeSeriesDataset data = generate_synthetic(spec);
  if (out_path.empty()) write_csv(data, out);
  else write_csv(data, std::filesystem::path(out_path));
  return kExitOk;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  PipelineDescription p;
  try {
    p = pipeline_from_json(read_json(path));
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  const PipelineValidation v = validate_pipeline(p);
  for (const auto& d : v.diagnostics) out << to_string(d.severity) << " [" << d.rule << "] " << d.message << "\n";
  out << nlohmann::json{{"pipeline", to_json(v.pipeline)}, {"diagnostics", to_json(v.diagnostics)}}.dump(2) << "\n";
  return v.has_errors() ? kExitUsage : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"AutoML model selection for energy disaggregation", "autonilm"};
  app.require_subcommand(1);

  DataArgs data;
  SearchArgs search;

  auto* search_cmd = app.add_subcommand("search", "TPE search for one appliance");
  add_data_options(search_cmd, data);
  add_search_options(search_cmd, search);
  search_cmd->add_option("--appliance", search.appliance, "target appliance")->required();
  search_cmd->add_option("--space", search.space, "search-space JSON (default: built-in)");

  std::string config_path;
  std::string eval_out;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("evaluate", "train one configuration and score the test range");
  add_data_options(eval_cmd, data);
  eval_cmd->add_option("--config", config_path, "configuration JSON")->required();
  eval_cmd->add_option("--out", eval_out, "result file (default: standard output)");
  eval_cmd->add_option("--seed", eval_seed, "random seed")->capture_default_str();

  SearchArgs bench;
  bench.budget = 15;
  auto* bench_cmd = app.add_subcommand("benchmark", "compare methods after a short search each");
  add_data_options(bench_cmd, data);
  add_search_options(bench_cmd, bench);

  std::string spec_path;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset as CSV");
  synth_cmd->add_option("--spec", spec_path, "scenario JSON (default: built-in scenario)");
  synth_cmd->add_option("--out", synth_out, "CSV file (default: standard output)");

  std::string pipeline_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a pipeline description");
  validate_cmd->add_option("--pipeline", pipeline_path, "pipeline JSON")->required();

  bool dump = false;
  auto* space_cmd = app.add_subcommand("space", "inspect the search space");
  space_cmd->add_flag("--dump", dump, "print the built-in space as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*search_cmd) return cmd_search(data, search, out, err);
    if (*eval_cmd) return cmd_evaluate(data, config_path, eval_out, eval_seed, out, err);
    if (*bench_cmd) return cmd_benchmark(data, bench, out, err);
    if (*synth_cmd) return cmd_synth(spec_path, synth_out, out);
    if (*validate_cmd) return cmd_validate(pipeline_path, out);
    if (*space_cmd) {
      if (!dump) {
        err << "space: nothing to do (use --dump)\n";
        return kExitUsage;
      }
      out << to_json(builtin_space()).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace autonilm
