#include "autonilm/harness/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "autonilm/error.hpp"

namespace autonilm {

std::size_t SynthSpec::samples() const {
  return static_cast<std::size_t>(std::floor(duration * rate + 1e-9));
}

void SynthSpec::check() const {
  if (appliances.empty()) throw ConfigError("synthetic spec needs at least one appliance");
  if (!(rate > 0.0)) throw ConfigError("synthetic rate must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  if (samples() < 2) throw ConfigError("synthetic duration yields fewer than two samples");
  std::vector<const SynthAppliance*> all;
  for (const auto& a : appliances) all.push_back(&a);
  for (const auto& a : unmetered) all.push_back(&a);
  for (const SynthAppliance* ap : all) {
    const auto& a = *ap;
    if (a.name.empty()) throw ConfigError("synthetic appliance without a name");
    if (a.levels.size() < 2) throw ConfigError("appliance " + a.name + " needs at least two levels");
    if (std::any_of(a.levels.begin(), a.levels.end(), [](double l) { return !(l >= 0.0) || !std::isfinite(l); }))
      throw ConfigError("appliance " + a.name + " has a negative or non-finite level");
    if (!(a.p_on >= 0.0 && a.p_on <= 1.0 && a.p_off >= 0.0 && a.p_off <= 1.0))
      throw ConfigError("appliance " + a.name + " has transition probabilities outside [0, 1]");
  }
}

SynthSpec default_synth_spec() {
  SynthSpec s;
  s.appliances = {
      {"app0", {0.0, 100.0}, 0.02, 0.05},
      {"app1", {0.0, 60.0}, 0.03, 0.03},
      {"app2", {0.0, 40.0}, 0.05, 0.02},
  };
  s.unmetered = {{"other", {0.0, 50.0}, 0.02, 0.02}};
  s.rate = 0.05;
  s.duration = 10000.0 / s.rate;
  s.noise_sigma = 10.0;
  s.seed = 0;
  return s;
}

double stationary_on_probability(double p_on, double p_off) {
  if (p_on + p_off == 0.0) return 0.0;
  return p_on / (p_on + p_off);
}

TimeSeriesDataset generate_synthetic(const SynthSpec& spec) {
  spec.check();
  const std::size_t n = spec.samples();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  TimeSeriesDataset out;
  out.sampling_rate = spec.rate;
  const double period = 1.0 / spec.rate;
  for (std::size_t t = 0; t < n; ++t) out.timestamps.push_back(spec.start + static_cast<double>(t) * period);
  out.mains.assign(n, 0.0);

  auto draw = [&](const SynthAppliance& app) {
    const std::size_t on_levels = app.levels.size() - 1;
    std::uniform_int_distribution<std::size_t> pick_on(1, on_levels);
    std::size_t state = unit(rng) < stationary_on_probability(app.p_on, app.p_off) ? pick_on(rng) : 0;

    NamedSeries series{app.name, std::vector<double>(n)};
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) {
        const double u = unit(rng);
        if (state == 0 && u < app.p_on) state = pick_on(rng);
        else if (state != 0 && u < app.p_off) state = 0;
      }
      double p = app.levels[state];
      if (spec.noise_sigma > 0.0) p = std::max(0.0, p + spec.noise_sigma * noise(rng));
      series.values[t] = p;
      out.mains[t] += p;
    }
    return series;
  };
  for (const auto& app : spec.appliances) out.appliances.push_back(draw(app));
  for (const auto& app : spec.unmetered) draw(app);
  if (spec.noise_sigma > 0.0)
    for (auto& m : out.mains) m = std::max(0.0, m + spec.noise_sigma * noise(rng));
  return out;
}

nlohmann::json to_json(const SynthSpec& spec) {
  auto list = [](const std::vector<SynthAppliance>& as) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& a : as)
      out.push_back({{"name", a.name}, {"levels", a.levels}, {"p_on", a.p_on}, {"p_off", a.p_off}});
    return out;
  };
  return {{"n_appliances", spec.appliances.size()},
          {"appliances", list(spec.appliances)},
          {"unmetered", list(spec.unmetered)},
          {"duration", spec.duration},
          {"rate", spec.rate},
          {"noise_sigma", spec.noise_sigma},
          {"seed", spec.seed},
          {"start", spec.start}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  try {
    SynthSpec s;
    auto parse = [](const nlohmann::json& ja) {
      return SynthAppliance{ja.at("name").get<std::string>(), ja.at("levels").get<std::vector<double>>(),
                            ja.at("p_on").get<double>(), ja.at("p_off").get<double>()};
    };
    for (const auto& ja : j.at("appliances")) s.appliances.push_back(parse(ja));
    for (const auto& ja : j.value("unmetered", nlohmann::json::array())) s.unmetered.push_back(parse(ja));
    if (j.contains("n_appliances") && j["n_appliances"].get<std::size_t>() != s.appliances.size())
      throw ConfigError("n_appliances does not match the appliance list");
    s.duration = j.at("duration").get<double>();
    s.rate = j.at("rate").get<double>();
    s.noise_sigma = j.value("noise_sigma", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.start = j.value("start", 0.0);
    s.check();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed synthetic spec: ") + e.what());
  }
}

}  // namespace autonilm
