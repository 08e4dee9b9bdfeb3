#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "daepos/types.hpp"

namespace daepos {

struct TreeParams {
  std::size_t max_depth = 0;          // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;       // 0 = all features at every split
};

// CART regression tree with variance-reduction splits. A sample goes left when
// feature <= threshold.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0;  // mean target of the node's samples
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  // Fits on the (possibly repeated) rows listed in `sample_rows`.
  static RegressionTree fit(const FeatureMatrix& x, const Eigen::VectorXd& y, std::vector<std::size_t> sample_rows,
                            const TreeParams& params, std::mt19937_64& rng);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<Node> nodes_;
};

struct ForestParams {
  std::size_t trees = 100;
  bool bootstrap = true;
  TreeParams tree;
  std::uint64_t seed = 0;
};

// Bagged regression trees; the prediction is the arithmetic mean of the trees.
class RandomForest {
 public:
  RandomForest() = default;
  explicit RandomForest(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {}

  static RandomForest fit(const FeatureMatrix& x, const Eigen::VectorXd& y, const ForestParams& params);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::vector<double> tree_predictions(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

}  // namespace daepos
