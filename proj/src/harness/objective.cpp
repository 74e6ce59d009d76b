#include "autonilm/harness/objective.hpp"

#include <algorithm>
#include <cmath>

#include "autonilm/error.hpp"
#include "autonilm/estimators/co.hpp"
#include "autonilm/estimators/fhmm.hpp"
#include "autonilm/estimators/tree.hpp"
#include "autonilm/harness/metrics.hpp"
#include "autonilm/harness/preprocess.hpp"
#include "autonilm/pipeline.hpp"

namespace autonilm {

std::size_t SplitSpec::train_end(const TimeSeriesDataset& data) const {
  const std::size_t n = data.size();
  std::size_t end;
  if (boundary) {
    end = static_cast<std::size_t>(std::lower_bound(data.timestamps.begin(), data.timestamps.end(), *boundary) -
                                   data.timestamps.begin());
  } else {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    end = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  }
  if (end == 0 || end >= n) throw DataError("train/test split leaves one side empty");
  return end;
}

std::pair<TimeRange, TimeRange> validation_ranges(const TimeSeriesDataset& data, const SplitSpec& split,
                                                  const HarnessOptions& options) {
  const std::size_t train = split.train_end(data);
  const auto val = static_cast<std::size_t>(std::llround(options.validation_fraction * static_cast<double>(train)));
  if (val == 0 || val >= train) throw DataError("validation split leaves one side empty");
  return {TimeRange{0, train - val}, TimeRange{train - val, train}};
}

namespace {

std::vector<double> cut(const std::vector<double>& v, TimeRange r) {
  return {v.begin() + static_cast<std::ptrdiff_t>(r.begin), v.begin() + static_cast<std::ptrdiff_t>(r.end)};
}

// Windows whose final sample is each t in `r`; the series start is padded by
// repeating its first sample.
RegressionDataset windows_for(const std::vector<double>& mains, const std::vector<double>& target, TimeRange r,
                              int length) {
  const auto ctx = static_cast<std::size_t>(length - 1);
  if (r.begin >= ctx) {
    const std::size_t from = r.begin - ctx;
    const std::size_t count = r.size() + ctx;
    return make_windows(std::span(mains).subspan(from, count), std::span(target).subspan(from, count), length);
  }
  const std::size_t pad = ctx - r.begin;
  std::vector<double> m(pad, mains.front());
  std::vector<double> y(pad, target.front());
  m.insert(m.end(), mains.begin(), mains.begin() + static_cast<std::ptrdiff_t>(r.end));
  y.insert(y.end(), target.begin(), target.begin() + static_cast<std::ptrdiff_t>(r.end));
  return make_windows(m, y, length);
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void require_valid(const Configuration& config) {
  const auto violations = validate_config(builtin_space(), config);
  if (violations.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& v : violations) msg += " " + v.message + ";";
  throw ConfigError(msg);
}

std::vector<PipelineStep> prepared_steps(const Configuration& config, int tree_window) {
  std::vector<PipelineStep> steps;
  if (config.method == Method::DT || config.method == Method::RF)
    steps.push_back({StepKind::Window, static_cast<double>(tree_window)});
  else if (is_neural(config.method))
    steps.push_back({StepKind::Window, config.number("sequence_length")});
  const auto checked = validate_pipeline({config, steps, true});
  if (checked.has_errors()) {
    std::string msg = "pipeline rejected:";
    for (const auto& d : checked.diagnostics)
      if (d.severity == Severity::Error) msg += " [" + d.rule + "] " + d.message + ";";
    throw ConfigError(msg);
  }
  return checked.pipeline.steps;
}

Predictions predict_windowed(const TimeSeriesDataset& data, const Configuration& config,
                             const std::vector<std::string>& appliances, TimeRange fit, TimeRange score,
                             const HarnessOptions& options) {
  std::vector<double> mains = data.mains;
  int length = 0;
  for (const auto& step : prepared_steps(config, options.tree_window)) {
    if (step.kind == StepKind::Standardize) {
      const Standardized s = standardize(cut(data.mains, fit));
      for (auto& m : mains) m = (m - s.mean) / s.std;
    } else if (step.kind == StepKind::Window) {
      length = static_cast<int>(*step.value);
    }
  }
  if (length < 1) throw ConfigError("pipeline has no window step");

  Predictions out;
  for (const auto& name : appliances) {
    const auto& target = data.appliance(name).values;
    const RegressionDataset train = windows_for(mains, target, fit, length);
    const RegressionDataset test = windows_for(mains, target, score, length);
    std::mt19937_64 rng(options.seed);
    Eigen::VectorXd pred;
    switch (config.method) {
      case Method::DT: {
        auto criterion = parse_criterion(config.label("criterion"));
        pred = predict_tree(fit_tree(train, *criterion, static_cast<int>(config.integer("min_sample_split"))),
                            test.inputs);
        break;
      }
      case Method::RF: {
        auto criterion = parse_criterion(config.label("criterion"));
        auto forest = fit_forest(train, *criterion, static_cast<int>(config.integer("min_sample_split")),
                                 static_cast<int>(config.integer("n_estimators")), rng);
        pred = predict_forest(forest, test.inputs);
        break;
      }
      case Method::FCNN: {
        FcnnHyperParams hp;
        hp.optimizer = *parse_optimizer(config.label("optimizer"));
        hp.learning_rate = config.number("learning_rate");
        hp.loss = *parse_loss(config.label("loss"));
        hp.n_layers = static_cast<int>(config.integer("n_layers"));
        hp.dropout = config.number("dropout");
        hp.sequence_length = length;
        pred = predict_fcnn(fit_fcnn(train, hp, rng, options.fcnn), test.inputs);
        break;
      }
      default:
        throw ConfigError("method " + std::string(to_string(config.method)) + " is not windowed");
    }
    out.appliances.push_back(name);
    out.values.push_back(to_vector(pred));
  }
  return out;
}

Predictions predict_joint(const TimeSeriesDataset& data, const Configuration& config,
                          const std::vector<std::string>& appliances, TimeRange fit, TimeRange score) {
  const int n_states = static_cast<int>(config.integer("n_states"));
  const auto score_mains = cut(data.mains, score);
  Eigen::MatrixXd columns;
  if (config.method == Method::CO) {
    ApplianceStateLibrary library;
    for (const auto& a : data.appliances) {
      library.names.push_back(a.name);
      library.levels.push_back(fit_states(cut(a.values, fit), n_states).levels);
    }
    columns = disaggregate_co(library, score_mains);
  } else {
    std::vector<NamedSeries> train;
    for (const auto& a : data.appliances) train.push_back({a.name, cut(a.values, fit)});
    columns = disaggregate_fhmm(fit_fhmm(train, cut(data.mains, fit), n_states), score_mains);
  }

  Predictions out;
  const auto names = data.appliance_names();
  for (const auto& name : appliances) {
    data.appliance(name);  // throws with the available names
    const auto col = static_cast<Eigen::Index>(std::find(names.begin(), names.end(), name) - names.begin());
    out.appliances.push_back(name);
    out.values.push_back(to_vector(columns.col(col)));
  }
  return out;
}

}  // namespace

Predictions fit_and_predict(const TimeSeriesDataset& data, const Configuration& config,
                            const std::vector<std::string>& appliances, TimeRange fit, TimeRange score,
                            const HarnessOptions& options) {
  require_valid(config);
  if (is_external(config.method))
    throw ConfigError("method " + std::string(to_string(config.method)) +
                      " has no native trainer; evaluate it through an external objective");
  if (fit.size() == 0 || score.size() == 0 || fit.end > data.size() || score.end > data.size())
    throw DataError("fit/score ranges are empty or exceed the dataset");
  if (config.method == Method::CO || config.method == Method::FHMM)
    return predict_joint(data, config, appliances, fit, score);
  return predict_windowed(data, config, appliances, fit, score, options);
}

Objective objective_for(std::shared_ptr<const TimeSeriesDataset> data, const std::string& appliance, SplitSpec split,
                        HarnessOptions options) {
  data->appliance(appliance);
  const auto [fit, score] = validation_ranges(*data, split, options);
  return [data, appliance, fit, score, options](const Configuration& config) {
    if (is_external(config.method)) {
      require_valid(config);
      const ExternalEndpoint* endpoint = options.external.find(config.method);
      if (!endpoint)
        throw ConfigError("no external objective registered for " + std::string(to_string(config.method)));
      return external_objective(*endpoint, config, options.dataset_ref);
    }
    const Predictions p = fit_and_predict(*data, config, {appliance}, fit, score, options);
    const auto truth = cut(data->appliance(appliance).values, score);
    return mae(p.values.front(), truth);
  };
}

Objective objective_for_all(std::shared_ptr<const TimeSeriesDataset> data, SplitSpec split, HarnessOptions options) {
  if (data->appliances.empty()) throw DataError("dataset has no appliances");
  const auto [fit, score] = validation_ranges(*data, split, options);
  return [data, fit, score, options](const Configuration& config) {
    const auto names = data->appliance_names();
    const Predictions p = fit_and_predict(*data, config, names, fit, score, options);
    double total = 0.0;
    for (std::size_t i = 0; i < names.size(); ++i)
      total += mae(p.values[i], cut(data->appliance(names[i]).values, score));
    return total / static_cast<double>(names.size());
  };
}

}  // namespace autonilm
