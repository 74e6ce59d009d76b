#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "autonilm/error.hpp"
#include "autonilm/estimators/tree.hpp"

#include "oracles.hpp"

using namespace autonilm;
using namespace oracles;

TEST_CASE("criterion labels") {
  CHECK(parse_criterion("MSE") == Criterion::MSE);
  CHECK(parse_criterion("Friedman_MSE") == Criterion::FriedmanMSE);
  CHECK(parse_criterion("MAE") == Criterion::MAE);
  CHECK_FALSE(parse_criterion("mse").has_value());
  for (Criterion c : kCriteria) CHECK(parse_criterion(to_string(c)) == c);
}

TEST_CASE("distinct inputs are memorized by every criterion") {
  RegressionDataset d;
  d.inputs.resize(3, 1);
  d.inputs << 1, 2, 3;
  d.targets.resize(3);
  d.targets << 10, 20, 30;
  for (Criterion c : kCriteria) {
    const TreeModel m = fit_tree(d, c, 2);
    const Eigen::VectorXd p = predict_tree(m, d.inputs);
    CHECK(p(0) == 10.0);
    CHECK(p(1) == 20.0);
    CHECK(p(2) == 30.0);
  }
}

TEST_CASE("random distinct inputs reach zero training error") {
  std::mt19937_64 rng(4);
  for (Criterion c : kCriteria) {
    const RegressionDataset d = noisy_dataset(rng, 80, 3);
    const TreeModel m = fit_tree(d, c, 2);
    CHECK((predict_tree(m, d.inputs) - d.targets).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("constant targets give one leaf") {
  RegressionDataset d;
  d.inputs = Eigen::MatrixXd::Random(20, 2);
  d.targets = Eigen::VectorXd::Constant(20, 7.5);
  for (Criterion c : kCriteria) {
    const TreeModel m = fit_tree(d, c, 2);
    CHECK(m.nodes().size() == 1);
    CHECK(m.leaf_count() == 1);
    const Eigen::MatrixXd any = Eigen::MatrixXd::Random(5, 2) * 100.0;
    CHECK((predict_tree(m, any).array() == 7.5).all());
  }
}

TEST_CASE("root split matches exhaustive search") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const RegressionDataset d = noisy_dataset(rng, 50, 3);
    const auto rows = all_rows(d);
    for (Criterion c : kCriteria) {
      const auto got = best_split(d, rows, c);
      const SplitChoice want = exhaustive_split(d, c);
      REQUIRE(got.has_value());
      INFO("trial " << trial << " criterion " << to_string(c));
      CHECK(got->feature == want.feature);
      CHECK(got->threshold == want.threshold);
      CHECK(got->improvement == doctest::Approx(want.improvement).epsilon(1e-9));
    }
  }
}

TEST_CASE("leaf values are mean or median") {
  RegressionDataset d;
  d.inputs = Eigen::MatrixXd::Zero(4, 1);
  d.targets.resize(4);
  d.targets << 1, 2, 3, 10;
  const auto rows = all_rows(d);
  CHECK(leaf_value(d, rows, Criterion::MSE) == 4.0);
  CHECK(leaf_value(d, rows, Criterion::FriedmanMSE) == 4.0);
  CHECK(leaf_value(d, rows, Criterion::MAE) == 2.5);
}

TEST_CASE("nodes below min_samples_split stay leaves") {
  RegressionDataset d;
  d.inputs.resize(6, 1);
  d.inputs << 1, 2, 3, 4, 5, 6;
  d.targets.resize(6);
  d.targets << 1, 2, 3, 4, 5, 6;
  CHECK(fit_tree(d, Criterion::MSE, 7).nodes().size() == 1);
  const TreeModel m = fit_tree(d, Criterion::MSE, 6);
  CHECK(m.nodes().size() == 3);
  CHECK(m.min_samples_split() == 6);
  CHECK_THROWS_AS(fit_tree(d, Criterion::MSE, 1), ConfigError);
}

TEST_CASE("threshold ties route left") {
  const TreeModel m({TreeNode{0, 2.0, 1, 2, 0.0}, TreeNode{-1, 0.0, -1, -1, 5.0}, TreeNode{-1, 0.0, -1, -1, 9.0}},
                    Criterion::MSE, 2);
  Eigen::MatrixXd x(3, 1);
  x << 2.0, 1.999, 2.001;
  const Eigen::VectorXd p = predict_tree(m, x);
  CHECK(p(0) == 5.0);
  CHECK(p(1) == 5.0);
  CHECK(p(2) == 9.0);
}

TEST_CASE("single-leaf tree predicts its constant") {
  const TreeModel m({TreeNode{-1, 0.0, -1, -1, 3.25}}, Criterion::MAE, 2);
  CHECK((predict_tree(m, Eigen::MatrixXd::Random(4, 7)).array() == 3.25).all());
}

TEST_CASE("feature index beyond the input width is an error") {
  const TreeModel m({TreeNode{4, 0.0, 1, 2, 0.0}, TreeNode{-1, 0.0, -1, -1, 1.0}, TreeNode{-1, 0.0, -1, -1, 2.0}},
                    Criterion::MSE, 2);
  CHECK_THROWS_AS(predict_tree(m, Eigen::MatrixXd::Zero(2, 3)), DataError);
}

TEST_CASE("empty and inconsistent datasets are rejected") {
  RegressionDataset empty;
  empty.inputs.resize(0, 2);
  empty.targets.resize(0);
  CHECK_THROWS_AS(fit_tree(empty, Criterion::MSE, 2), DataError);
  RegressionDataset bad;
  bad.inputs = Eigen::MatrixXd::Zero(3, 1);
  bad.targets = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(fit_tree(bad, Criterion::MSE, 2), DataError);
  bad.targets = Eigen::VectorXd::Zero(3);
  bad.inputs(1, 0) = std::nan("");
  CHECK_THROWS_AS(fit_tree(bad, Criterion::MSE, 2), DataError);
}

TEST_CASE("one tree without bootstrap equals fit_tree") {
  std::mt19937_64 data_rng(5);
  const RegressionDataset d = noisy_dataset(data_rng, 60, 2);
  std::mt19937_64 rng(1);
  for (Criterion c : kCriteria) {
    const ForestModel f = fit_forest(d, c, 4, 1, rng, false);
    const Eigen::MatrixXd probe = Eigen::MatrixXd::Random(30, 2) * 2.0;
    CHECK(predict_forest(f, probe) == predict_tree(fit_tree(d, c, 4), probe));
  }
}

TEST_CASE("forest prediction is the mean of its trees") {
  std::mt19937_64 data_rng(6);
  const RegressionDataset d = noisy_dataset(data_rng, 60, 2);
  std::mt19937_64 rng(2);
  const ForestModel f = fit_forest(d, Criterion::MSE, 5, 7, rng);
  CHECK(f.trees.size() == 7);
  CHECK(f.n_estimators == 7);
  const Eigen::MatrixXd probe = Eigen::MatrixXd::Random(25, 2);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(25);
  for (const auto& t : f.trees) sum += predict_tree(t, probe);
  CHECK((predict_forest(f, probe) - sum / 7.0).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("seeded forests are identical") {
  std::mt19937_64 data_rng(7);
  const RegressionDataset d = noisy_dataset(data_rng, 60, 2);
  std::mt19937_64 a(9), b(9);
  const ForestModel fa = fit_forest(d, Criterion::MAE, 3, 5, a);
  const ForestModel fb = fit_forest(d, Criterion::MAE, 3, 5, b);
  const Eigen::MatrixXd probe = Eigen::MatrixXd::Random(40, 2);
  CHECK(predict_forest(fa, probe) == predict_forest(fb, probe));
  std::mt19937_64 c(10);
  CHECK_THROWS_AS(fit_forest(d, Criterion::MSE, 2, 0, c), ConfigError);
}

TEST_CASE("predictions are finite") {
  std::mt19937_64 rng(8);
  const RegressionDataset d = noisy_dataset(rng, 100, 4);
  for (Criterion c : kCriteria) {
    const Eigen::VectorXd p = predict_tree(fit_tree(d, c, 10), Eigen::MatrixXd::Random(50, 4) * 10.0);
    CHECK(p.allFinite());
  }
}
