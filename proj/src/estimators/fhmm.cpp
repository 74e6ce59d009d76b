#include "autonilm/estimators/fhmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "autonilm/error.hpp"
#include "autonilm/estimators/co.hpp"

namespace autonilm {

std::size_t FhmmModel::joint_states() const {
  std::size_t j = 1;
  for (const auto& c : chains) {
    j *= c.means.size();
    if (j > kMaxJointStates * 1024) break;
  }
  return j;
}

void FhmmModel::check() const {
  if (chains.empty()) throw ConfigError("FHMM has no chains");
  if (!(sigma > 0.0)) throw ConfigError("FHMM emission sigma must be positive");
  for (const auto& c : chains) {
    const auto k = static_cast<Eigen::Index>(c.means.size());
    if (k == 0 || k > 255) throw ConfigError("chain " + c.name + ": state count must lie in [1, 255]");
    if (c.initial.size() != k || c.transition.rows() != k || c.transition.cols() != k)
      throw ConfigError("chain " + c.name + ": parameter shapes disagree with its state count");
    if ((c.initial.array() < 0.0).any() || (c.transition.array() < 0.0).any())
      throw ConfigError("chain " + c.name + ": negative probability");
    for (Eigen::Index r = 0; r < k; ++r)
      if (std::abs(c.transition.row(r).sum() - 1.0) > 1e-9)
        throw ConfigError("chain " + c.name + ": transition row does not sum to 1");
  }
}

FhmmModel fit_fhmm(std::span<const NamedSeries> appliances, std::span<const double> aggregate, int n_states) {
  if (appliances.empty()) throw DataError("FHMM needs at least one appliance");
  FhmmModel model;
  std::vector<double> residual(aggregate.begin(), aggregate.end());

  for (const auto& app : appliances) {
    if (app.values.size() < 2) throw DataError("appliance " + app.name + " needs at least 2 samples");
    if (app.values.size() != aggregate.size())
      throw DataError("appliance " + app.name + " is not aligned with the aggregate");

    MarkovChain chain;
    chain.name = app.name;
    chain.means = fit_states(app.values, n_states).levels;
    const auto k = static_cast<Eigen::Index>(chain.means.size());

    std::vector<Eigen::Index> states;
    states.reserve(app.values.size());
    for (std::size_t t = 0; t < app.values.size(); ++t) {
      Eigen::Index best = 0;
      for (Eigen::Index s = 1; s < k; ++s)
        if (std::abs(app.values[t] - chain.means[static_cast<std::size_t>(s)]) <
            std::abs(app.values[t] - chain.means[static_cast<std::size_t>(best)]))
          best = s;
      states.push_back(best);
      residual[t] -= chain.means[static_cast<std::size_t>(best)];
    }

    Eigen::MatrixXd counts = Eigen::MatrixXd::Ones(k, k);
    for (std::size_t t = 1; t < states.size(); ++t) counts(states[t - 1], states[t]) += 1.0;
    chain.transition = counts.array().colwise() / counts.rowwise().sum().array();

    chain.initial = Eigen::VectorXd::Ones(k);
    chain.initial[states.front()] += 1.0;
    chain.initial /= chain.initial.sum();

    model.chains.push_back(std::move(chain));
  }

  double mean = 0.0;
  for (double r : residual) mean += r;
  mean /= static_cast<double>(residual.size());
  double var = 0.0;
  for (double r : residual) var += (r - mean) * (r - mean);
  var /= static_cast<double>(residual.size());
  model.sigma = std::max(1.0, std::sqrt(var));
  return model;
}

namespace {

struct JointLayout {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> strides;  // last chain varies fastest
  std::size_t total = 1;

  explicit JointLayout(const FhmmModel& m) {
    const std::size_t n = m.chains.size();
    sizes.resize(n);
    strides.resize(n);
    for (std::size_t i = n; i-- > 0;) {
      sizes[i] = m.chains[i].means.size();
      strides[i] = total;
      total *= sizes[i];
    }
  }
  std::size_t digit(std::size_t j, std::size_t chain) const { return (j / strides[chain]) % sizes[chain]; }
  std::size_t with_digit(std::size_t j, std::size_t chain, std::size_t v) const {
    return j - digit(j, chain) * strides[chain] + v * strides[chain];
  }
};

double log_emission(double y, double mean, double sigma) {
  const double z = (y - mean) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

StatePath viterbi(const FhmmModel& model, std::span<const double> aggregate) {
  model.check();
  if (model.joint_states() > kMaxJointStates)
    throw ConfigError("FHMM joint state space exceeds " + std::to_string(kMaxJointStates) +
                      " states; approximate inference is not supported");
  const std::size_t T = aggregate.size();
  const std::size_t N = model.chains.size();
  if (T == 0) return {};

  const JointLayout layout(model);
  const std::size_t J = layout.total;

  std::vector<double> joint_mean(J, 0.0);
  std::vector<double> log_init(J, 0.0);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t s = layout.digit(j, n);
      joint_mean[j] += model.chains[n].means[s];
      log_init[j] += std::log(model.chains[n].initial[static_cast<Eigen::Index>(s)]);
    }
  std::vector<Eigen::MatrixXd> log_trans;
  for (const auto& c : model.chains) log_trans.push_back(c.transition.array().log().matrix());

  std::vector<double> delta(J);
  for (std::size_t j = 0; j < J; ++j) delta[j] = log_init[j] + log_emission(aggregate[0], joint_mean[j], model.sigma);

  // back[(t * N + n) * J + j]: previous state of chain n at stage n of step t.
  std::vector<std::uint8_t> back(T * N * J, 0);
  std::vector<double> next(J);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t k = layout.sizes[n];
      std::uint8_t* bp = &back[(t * N + n) * J];
      for (std::size_t j = 0; j < J; ++j) {
        const std::size_t cur = layout.digit(j, n);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t p = 0; p < k; ++p) {
          const double v = delta[layout.with_digit(j, n, p)] +
                           log_trans[n](static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(cur));
          if (v > best) {
            best = v;
            arg = p;
          }
        }
        next[j] = best;
        bp[j] = static_cast<std::uint8_t>(arg);
      }
      std::swap(delta, next);
    }
    for (std::size_t j = 0; j < J; ++j) delta[j] += log_emission(aggregate[t], joint_mean[j], model.sigma);
  }

  std::size_t j = static_cast<std::size_t>(std::max_element(delta.begin(), delta.end()) - delta.begin());
  StatePath path(T, std::vector<int>(N));
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t n = 0; n < N; ++n) path[t][n] = static_cast<int>(layout.digit(j, n));
    if (t == 0) break;
    for (std::size_t n = N; n-- > 0;) j = layout.with_digit(j, n, back[(t * N + n) * J + j]);
  }
  return path;
}

double path_log_likelihood(const FhmmModel& model, std::span<const double> aggregate, const StatePath& path) {
  if (path.size() != aggregate.size()) throw Error("path and aggregate lengths differ");
  double ll = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    double mean = 0.0;
    for (std::size_t n = 0; n < model.chains.size(); ++n) {
      const auto& c = model.chains[n];
      const auto s = static_cast<Eigen::Index>(path[t][n]);
      mean += c.means[static_cast<std::size_t>(s)];
      ll += t == 0 ? std::log(c.initial[s]) : std::log(c.transition(path[t - 1][n], s));
    }
    ll += log_emission(aggregate[t], mean, model.sigma);
  }
  return ll;
}

Eigen::MatrixXd disaggregate_fhmm(const FhmmModel& model, std::span<const double> aggregate) {
  const StatePath path = viterbi(model, aggregate);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(path.size()), static_cast<Eigen::Index>(model.chains.size()));
  for (std::size_t t = 0; t < path.size(); ++t)
    for (std::size_t n = 0; n < model.chains.size(); ++n)
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n)) =
          model.chains[n].means[static_cast<std::size_t>(path[t][n])];
  return out;
}

}  // namespace autonilm
