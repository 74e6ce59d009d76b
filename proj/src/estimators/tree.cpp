#include "autonilm/estimators/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <utility>

#include "autonilm/error.hpp"

namespace autonilm {

void RegressionDataset::check() const {
  if (inputs.rows() != targets.size())
    throw DataError("regression dataset: " + std::to_string(inputs.rows()) + " input rows but " +
                    std::to_string(targets.size()) + " targets");
  if (!inputs.allFinite() || !targets.allFinite())
    throw DataError("regression dataset contains non-finite values");
}

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::MSE: return "MSE";
    case Criterion::FriedmanMSE: return "Friedman_MSE";
    case Criterion::MAE: return "MAE";
  }
  return "?";
}

std::optional<Criterion> parse_criterion(std::string_view label) {
  if (label == "MSE") return Criterion::MSE;
  if (label == "Friedman_MSE") return Criterion::FriedmanMSE;
  if (label == "MAE") return Criterion::MAE;
  return std::nullopt;
}

namespace {

// out[k] = sum |y - median| over ys[0..k), maintained with two heaps.
std::vector<double> prefix_abs_deviation(const std::vector<double>& ys) {
  std::vector<double> out(ys.size() + 1, 0.0);
  std::priority_queue<double> lower;
  std::priority_queue<double, std::vector<double>, std::greater<>> upper;
  double sum_lower = 0.0;
  double sum_upper = 0.0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double y = ys[k];
    if (lower.empty() || y <= lower.top()) {
      lower.push(y);
      sum_lower += y;
    } else {
      upper.push(y);
      sum_upper += y;
    }
    if (lower.size() > upper.size() + 1) {
      double v = lower.top();
      lower.pop();
      sum_lower -= v;
      upper.push(v);
      sum_upper += v;
    } else if (upper.size() > lower.size()) {
      double v = upper.top();
      upper.pop();
      sum_upper -= v;
      lower.push(v);
      sum_lower += v;
    }
    const double m = lower.top();
    const double imbalance = static_cast<double>(lower.size()) - static_cast<double>(upper.size());
    out[k + 1] = sum_upper - sum_lower + m * imbalance;
  }
  return out;
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double upper = *mid;
  if (n % 2 == 1) return upper;
  double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

double leaf_value(const RegressionDataset& data, std::span<const Eigen::Index> rows, Criterion criterion) {
  std::vector<double> ys;
  ys.reserve(rows.size());
  for (auto r : rows) ys.push_back(data.targets[r]);
  if (criterion == Criterion::MAE) return median_of(std::move(ys));
  return std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
}

std::optional<SplitChoice> best_split(const RegressionDataset& data, std::span<const Eigen::Index> rows,
                                      Criterion criterion) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;

  std::optional<SplitChoice> best;
  std::vector<Eigen::Index> order(rows.begin(), rows.end());
  std::vector<double> xs(n);
  std::vector<double> ys(n);

  for (int f = 0; f < static_cast<int>(data.features()); ++f) {
    std::copy(rows.begin(), rows.end(), order.begin());
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return data.inputs(a, f) < data.inputs(b, f); });
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = data.inputs(order[i], f);
      ys[i] = data.targets[order[i]];
    }
    if (xs.front() == xs.back()) continue;

    std::vector<double> left_dev;
    std::vector<double> right_dev;
    double parent_dev = 0.0;
    if (criterion == Criterion::MAE) {
      left_dev = prefix_abs_deviation(ys);
      std::vector<double> reversed(ys.rbegin(), ys.rend());
      right_dev = prefix_abs_deviation(reversed);
      parent_dev = left_dev[n];
    }

    double total = 0.0;
    double total_sq = 0.0;
    for (double y : ys) {
      total += y;
      total_sq += y * y;
    }
    const double parent_sse = total_sq - total * total / static_cast<double>(n);

    double sum_l = 0.0;
    double sq_l = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      sum_l += ys[i - 1];
      sq_l += ys[i - 1] * ys[i - 1];
      if (!(xs[i - 1] < xs[i])) continue;

      const double n_l = static_cast<double>(i);
      const double n_r = static_cast<double>(n - i);
      const double sum_r = total - sum_l;
      double improvement = 0.0;
      switch (criterion) {
        case Criterion::MSE: {
          const double sse_l = sq_l - sum_l * sum_l / n_l;
          const double sse_r = (total_sq - sq_l) - sum_r * sum_r / n_r;
          improvement = parent_sse - sse_l - sse_r;
          break;
        }
        case Criterion::FriedmanMSE: {
          const double diff = sum_l / n_l - sum_r / n_r;
          improvement = n_l * n_r / (n_l + n_r) * diff * diff;
          break;
        }
        case Criterion::MAE:
          improvement = parent_dev - left_dev[i] - right_dev[n - i];
          break;
      }

      if (!best || improvement > best->improvement) {
        double threshold = 0.5 * (xs[i - 1] + xs[i]);
        if (!(threshold < xs[i])) threshold = xs[i - 1];
        best = SplitChoice{f, threshold, improvement};
      }
    }
  }
  return best;
}

TreeModel::TreeModel(std::vector<TreeNode> nodes, Criterion criterion, int min_samples_split)
    : nodes_(std::move(nodes)), criterion_(criterion), min_samples_split_(min_samples_split) {}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double TreeModel::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.feature >= row.size())
      throw DataError("tree splits on feature " + std::to_string(node.feature) + " but input has " +
                      std::to_string(row.size()) + " columns");
    i = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

TreeModel fit_tree(const RegressionDataset& data, std::span<const Eigen::Index> rows, Criterion criterion,
                   int min_samples_split) {
  data.check();
  if (rows.empty()) throw DataError("cannot fit a tree on an empty dataset");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be at least 2");

  std::vector<TreeNode> nodes(1);
  std::vector<std::pair<int, std::vector<Eigen::Index>>> stack;
  stack.emplace_back(0, std::vector<Eigen::Index>(rows.begin(), rows.end()));

  while (!stack.empty()) {
    auto [id, members] = std::move(stack.back());
    stack.pop_back();

    auto [lo, hi] = std::minmax_element(members.begin(), members.end(), [&](Eigen::Index a, Eigen::Index b) {
      return data.targets[a] < data.targets[b];
    });
    std::optional<SplitChoice> split;
    if (static_cast<int>(members.size()) >= min_samples_split && data.targets[*lo] < data.targets[*hi])
      split = best_split(data, members, criterion);

    if (!split) {
      nodes[static_cast<std::size_t>(id)].value = leaf_value(data, members, criterion);
      continue;
    }

    std::vector<Eigen::Index> left;
    std::vector<Eigen::Index> right;
    for (auto r : members) (data.inputs(r, split->feature) <= split->threshold ? left : right).push_back(r);

    const int l = static_cast<int>(nodes.size());
    nodes.resize(nodes.size() + 2);
    auto& node = nodes[static_cast<std::size_t>(id)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = l;
    node.right = l + 1;
    stack.emplace_back(l + 1, std::move(right));
    stack.emplace_back(l, std::move(left));
  }
  return TreeModel(std::move(nodes), criterion, min_samples_split);
}

TreeModel fit_tree(const RegressionDataset& data, Criterion criterion, int min_samples_split) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return fit_tree(data, rows, criterion, min_samples_split);
}

Eigen::VectorXd predict_tree(const TreeModel& model, const Eigen::MatrixXd& inputs) {
  Eigen::VectorXd out(inputs.rows());
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) out[r] = model.predict_row(inputs.row(r));
  return out;
}

ForestModel fit_forest(const RegressionDataset& data, Criterion criterion, int min_samples_split,
                       int n_estimators, std::mt19937_64& rng, bool bootstrap) {
  if (n_estimators < 1) throw ConfigError("n_estimators must be at least 1");
  data.check();
  if (data.rows() == 0) throw DataError("cannot fit a forest on an empty dataset");

  ForestModel forest;
  forest.n_estimators = n_estimators;
  std::uniform_int_distribution<Eigen::Index> pick(0, data.rows() - 1);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.rows()));
  for (int t = 0; t < n_estimators; ++t) {
    if (bootstrap) {
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    }
    forest.trees.push_back(fit_tree(data, rows, criterion, min_samples_split));
  }
  return forest;
}

Eigen::VectorXd predict_forest(const ForestModel& model, const Eigen::MatrixXd& inputs) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(inputs.rows());
  for (const auto& t : model.trees) sum += predict_tree(t, inputs);
  return sum / static_cast<double>(model.trees.size());
}

}  // namespace autonilm
