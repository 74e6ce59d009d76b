#pragma once

// CART regression trees grown greedily without a depth limit, and bagged
// forests of them.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "autonilm/estimators/regression_dataset.hpp"

namespace autonilm {

enum class Criterion { MSE, FriedmanMSE, MAE };

std::string_view to_string(Criterion c);
std::optional<Criterion> parse_criterion(std::string_view label);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf prediction, watts

  bool is_leaf() const { return feature < 0; }
};

struct SplitChoice {
  int feature;
  double threshold;    // rows with value <= threshold go left
  double improvement;  // criterion-specific, >= 0 up to rounding
};

class TreeModel {
 public:
  TreeModel(std::vector<TreeNode> nodes, Criterion criterion, int min_samples_split);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  Criterion criterion() const { return criterion_; }
  int min_samples_split() const { return min_samples_split_; }
  std::size_t leaf_count() const;

  /// Throws DataError when the row is narrower than a split feature.
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

 private:
  std::vector<TreeNode> nodes_;
  Criterion criterion_;
  int min_samples_split_;
};

/// Best split of the given rows (duplicates allowed) or nullopt when every
/// feature is constant over them. Ties keep the lowest feature, then the
/// lowest threshold.
std::optional<SplitChoice> best_split(const RegressionDataset& data,
                                      std::span<const Eigen::Index> rows, Criterion criterion);

/// Leaf prediction for the given rows: mean, or median for MAE.
double leaf_value(const RegressionDataset& data, std::span<const Eigen::Index> rows,
                  Criterion criterion);

TreeModel fit_tree(const RegressionDataset& data, Criterion criterion, int min_samples_split);
TreeModel fit_tree(const RegressionDataset& data, std::span<const Eigen::Index> rows,
                   Criterion criterion, int min_samples_split);
Eigen::VectorXd predict_tree(const TreeModel& model, const Eigen::MatrixXd& inputs);

struct ForestModel {
  std::vector<TreeModel> trees;
  int n_estimators = 0;
};

/// `bootstrap = false` fits every tree on the full data set.
ForestModel fit_forest(const RegressionDataset& data, Criterion criterion, int min_samples_split,
                       int n_estimators, std::mt19937_64& rng, bool bootstrap = true);
Eigen::VectorXd predict_forest(const ForestModel& model, const Eigen::MatrixXd& inputs);

}  // namespace autonilm
