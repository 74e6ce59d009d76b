#pragma once

// Fully-connected regression network: n_layers hidden ReLU layers of fixed
// width, inverted dropout while training, one linear output unit.

#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "autonilm/estimators/regression_dataset.hpp"

namespace autonilm {

enum class OptimizerKind { Adam, Nadam, RMSprop };
enum class LossKind { MSE, MAE };

std::optional<OptimizerKind> parse_optimizer(std::string_view label);
std::optional<LossKind> parse_loss(std::string_view label);

struct FcnnHyperParams {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  LossKind loss = LossKind::MSE;
  int n_layers = 5;
  double dropout = 0.1;
  int sequence_length = 64;
};

struct FcnnTrainOptions {
  int epochs = 10;
  int batch_size = 64;
  int patience = 2;  // non-improving validation epochs before stopping
  double validation_fraction = 0.1;
  int hidden_width = 32;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

class Network {
 public:
  Network() = default;
  /// He-normal initialisation.
  Network(int input_width, int n_hidden, int hidden_width, std::mt19937_64& rng);
  explicit Network(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  int input_width() const;
  int hidden_layers() const { return static_cast<int>(layers_.size()) - 1; }

  /// Inference pass, rows of `x` are samples.
  Eigen::VectorXd forward(const Eigen::MatrixXd& x) const;

  /// Mean loss over the batch and its gradient in flattened parameter order.
  /// Dropout is applied to hidden activations when `dropout > 0` and `rng`
  /// is given.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LossKind loss,
                           double dropout, std::mt19937_64* rng, Eigen::VectorXd& gradient) const;

  Eigen::Index parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

 private:
  std::vector<DenseLayer> layers_;
};

double batch_loss(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth, LossKind loss);

/// First-order optimiser over a flat parameter vector.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, Eigen::Index size);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient);

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kRho = 0.9;
  static constexpr double kEpsilon = 1e-8;

 private:
  OptimizerKind kind_;
  double lr_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

struct FcnnModel {
  Network network;
  FcnnHyperParams hp;
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_std;
  double target_mean = 0.0;
  double target_std = 1.0;
  int epochs_run = 0;
};

/// Throws ConfigError on out-of-range hyper-parameters or a width mismatch,
/// TrainingDiverged when the loss stops being finite.
FcnnModel fit_fcnn(const RegressionDataset& data, const FcnnHyperParams& hp, std::mt19937_64& rng,
                   const FcnnTrainOptions& options = {});

/// Watts, clamped at zero. Throws DataError on a width mismatch.
Eigen::VectorXd predict_fcnn(const FcnnModel& model, const Eigen::MatrixXd& inputs);

}  // namespace autonilm
