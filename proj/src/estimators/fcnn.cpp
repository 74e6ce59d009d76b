#include "autonilm/estimators/fcnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "autonilm/error.hpp"

namespace autonilm {

std::optional<OptimizerKind> parse_optimizer(std::string_view label) {
  if (label == "Adam") return OptimizerKind::Adam;
  if (label == "Nadam") return OptimizerKind::Nadam;
  if (label == "RMSprop") return OptimizerKind::RMSprop;
  return std::nullopt;
}

std::optional<LossKind> parse_loss(std::string_view label) {
  if (label == "MSE") return LossKind::MSE;
  if (label == "MAE") return LossKind::MAE;
  return std::nullopt;
}

Network::Network(int input_width, int n_hidden, int hidden_width, std::mt19937_64& rng) {
  int in = input_width;
  for (int l = 0; l <= n_hidden; ++l) {
    const int out = l == n_hidden ? 1 : hidden_width;
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / in));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = init(rng);
    layers_.push_back(std::move(layer));
    in = out;
  }
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

int Network::input_width() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols());
}

Eigen::VectorXd Network::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = a * layers_[l].weights.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a.col(0);
}

double batch_loss(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth, LossKind loss) {
  const Eigen::VectorXd diff = predicted - truth;
  if (loss == LossKind::MSE) return diff.squaredNorm() / static_cast<double>(diff.size());
  return diff.cwiseAbs().sum() / static_cast<double>(diff.size());
}

double Network::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LossKind loss,
                                  double dropout, std::mt19937_64* rng, Eigen::VectorXd& gradient) const {
  const std::size_t depth = layers_.size();
  const double batch = static_cast<double>(x.rows());
  const bool drop = dropout > 0.0 && rng != nullptr;
  const double keep = 1.0 - dropout;

  // acts[l] is the input of layer l; pre[l] its pre-activation.
  std::vector<Eigen::MatrixXd> acts(depth);
  std::vector<Eigen::MatrixXd> pre(depth);
  std::vector<Eigen::MatrixXd> masks(depth);
  acts[0] = x;
  Eigen::MatrixXd out;
  for (std::size_t l = 0; l < depth; ++l) {
    Eigen::MatrixXd z = acts[l] * layers_[l].weights.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    pre[l] = z;
    if (l + 1 == depth) {
      out = std::move(z);
      break;
    }
    Eigen::MatrixXd a = z.cwiseMax(0.0);
    if (drop) {
      std::bernoulli_distribution kept(keep);
      masks[l].resize(a.rows(), a.cols());
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) masks[l](i, j) = kept(*rng) ? 1.0 / keep : 0.0;
      a = a.cwiseProduct(masks[l]);
    }
    acts[l + 1] = std::move(a);
  }

  const Eigen::VectorXd diff = out.col(0) - y;
  double value;
  Eigen::MatrixXd delta(x.rows(), 1);
  if (loss == LossKind::MSE) {
    value = diff.squaredNorm() / batch;
    delta.col(0) = 2.0 * diff / batch;
  } else {
    value = diff.cwiseAbs().sum() / batch;
    delta.col(0) = diff.unaryExpr([](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }) / batch;
  }

  std::vector<DenseLayer> grads(depth);
  for (std::size_t l = depth; l-- > 0;) {
    grads[l].weights = delta.transpose() * acts[l];
    grads[l].bias = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd back = delta * layers_[l].weights;
    if (drop) back = back.cwiseProduct(masks[l - 1]);
    delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }

  gradient.resize(parameter_count());
  Eigen::Index k = 0;
  for (const auto& g : grads) {
    gradient.segment(k, g.weights.size()) = Eigen::Map<const Eigen::VectorXd>(g.weights.data(), g.weights.size());
    k += g.weights.size();
    gradient.segment(k, g.bias.size()) = g.bias;
    k += g.bias.size();
  }
  return value;
}

Eigen::Index Network::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

Eigen::VectorXd Network::parameters() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    flat.segment(k, l.weights.size()) = Eigen::Map<const Eigen::VectorXd>(l.weights.data(), l.weights.size());
    k += l.weights.size();
    flat.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return flat;
}

void Network::set_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) throw Error("parameter vector has the wrong size");
  Eigen::Index k = 0;
  for (auto& l : layers_) {
    Eigen::Map<Eigen::VectorXd>(l.weights.data(), l.weights.size()) = flat.segment(k, l.weights.size());
    k += l.weights.size();
    l.bias = flat.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, Eigen::Index size)
    : kind_(kind), lr_(learning_rate), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

void Optimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& g) {
  ++t_;
  switch (kind_) {
    case OptimizerKind::RMSprop:
      v_ = kRho * v_ + (1.0 - kRho) * g.cwiseAbs2();
      params.array() -= lr_ * g.array() / (v_.array().sqrt() + kEpsilon);
      return;
    case OptimizerKind::Adam:
    case OptimizerKind::Nadam: {
      m_ = kBeta1 * m_ + (1.0 - kBeta1) * g;
      v_ = kBeta2 * v_ + (1.0 - kBeta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
      const Eigen::ArrayXd denom = (v_.array() / c2).sqrt() + kEpsilon;
      if (kind_ == OptimizerKind::Adam) {
        params.array() -= lr_ * (m_.array() / c1) / denom;
      } else {
        // Nesterov look-ahead: blend the corrected momentum with the current gradient.
        params.array() -= lr_ * (kBeta1 * m_.array() / c1 + (1.0 - kBeta1) * g.array() / c1) / denom;
      }
      return;
    }
  }
}

namespace {

void check_hyper(const FcnnHyperParams& hp, const FcnnTrainOptions& opt) {
  if (hp.n_layers < 1) throw ConfigError("n_layers must be positive");
  if (!(hp.dropout >= 0.0 && hp.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(hp.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (hp.sequence_length < 1) throw ConfigError("sequence_length must be positive");
  if (opt.epochs < 1 || opt.batch_size < 1 || opt.hidden_width < 1)
    throw ConfigError("epochs, batch_size and hidden_width must be positive");
}

}  // namespace

FcnnModel fit_fcnn(const RegressionDataset& data, const FcnnHyperParams& hp, std::mt19937_64& rng,
                   const FcnnTrainOptions& options) {
  check_hyper(hp, options);
  data.check();
  if (data.rows() == 0) throw DataError("cannot train on an empty dataset");
  if (data.features() != hp.sequence_length)
    throw ConfigError("input width " + std::to_string(data.features()) + " differs from sequence_length " +
                      std::to_string(hp.sequence_length));

  FcnnModel model;
  model.hp = hp;
  model.input_mean = data.inputs.colwise().mean().transpose();
  model.input_std = ((data.inputs.rowwise() - model.input_mean.transpose()).array().square().colwise().mean())
                        .sqrt()
                        .max(1e-8)
                        .matrix()
                        .transpose();
  model.target_mean = data.targets.mean();
  model.target_std = std::max(1e-8, std::sqrt((data.targets.array() - model.target_mean).square().mean()));

  const Eigen::MatrixXd x = (data.inputs.rowwise() - model.input_mean.transpose()).array().rowwise() /
                            model.input_std.transpose().array();
  const Eigen::VectorXd y = (data.targets.array() - model.target_mean) / model.target_std;

  Eigen::Index n_val = 0;
  if (options.patience > 0 && data.rows() >= 20)
    n_val = static_cast<Eigen::Index>(std::floor(options.validation_fraction * static_cast<double>(data.rows())));
  const Eigen::Index n_train = data.rows() - n_val;

  Network net(hp.sequence_length, hp.n_layers, options.hidden_width, rng);
  Optimizer opt(hp.optimizer, hp.learning_rate, net.parameter_count());
  Eigen::VectorXd params = net.parameters();
  Eigen::VectorXd grad;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Eigen::VectorXd best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const Eigen::MatrixXd xb = x(idx, Eigen::all);
      const Eigen::VectorXd yb = y(idx);
      double loss = net.loss_and_gradient(xb, yb, hp.loss, hp.dropout, &rng, grad);
      if (!std::isfinite(loss) || !grad.allFinite())
        throw TrainingDiverged(epoch, "training diverged in epoch " + std::to_string(epoch));
      opt.step(params, grad);
      net.set_parameters(params);
    }
    model.epochs_run = epoch;

    if (n_val == 0) {
      best_params = params;
      continue;
    }
    const double val = batch_loss(net.forward(x.bottomRows(n_val)), y.tail(n_val), hp.loss);
    if (!std::isfinite(val)) throw TrainingDiverged(epoch, "training diverged in epoch " + std::to_string(epoch));
    if (val < best_val) {
      best_val = val;
      best_params = params;
      stale = 0;
    } else if (++stale >= options.patience) {
      break;
    }
  }

  net.set_parameters(best_params);
  model.network = std::move(net);
  return model;
}

Eigen::VectorXd predict_fcnn(const FcnnModel& model, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != model.network.input_width())
    throw DataError("input width " + std::to_string(inputs.cols()) + " differs from model width " +
                    std::to_string(model.network.input_width()));
  const Eigen::MatrixXd x = (inputs.rowwise() - model.input_mean.transpose()).array().rowwise() /
                            model.input_std.transpose().array();
  Eigen::VectorXd out = model.network.forward(x) * model.target_std;
  out.array() += model.target_mean;
  return out.cwiseMax(0.0);
}

}  // namespace autonilm
