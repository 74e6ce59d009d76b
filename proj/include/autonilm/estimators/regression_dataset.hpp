#pragma once

#include <Eigen/Dense>

namespace autonilm {

/// Rows are samples, columns are features; targets are watts.
struct RegressionDataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;

  Eigen::Index rows() const { return inputs.rows(); }
  Eigen::Index features() const { return inputs.cols(); }

  /// Throws DataError on mismatched row counts or non-finite values.
  void check() const;
};

}  // namespace autonilm
