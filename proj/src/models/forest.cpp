#include "daepos/models/forest.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "daepos/error.hpp"

namespace daepos {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0;
  std::size_t left_count = 0;  // samples going left, in sorted order
  double score = -std::numeric_limits<double>::infinity();
};

template <typename Rng>
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const Eigen::VectorXd& y, const TreeParams& params, Rng& rng)
      : x_(x), y_(y), params_(params), rng_(rng) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<RegressionTree::Node> build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();

    double sum = 0;
    for (const auto r : rows) sum += y_[static_cast<Eigen::Index>(r)];
    const double n = static_cast<double>(rows.size());
    nodes_[id].value = sum / n;

    const bool pure = std::all_of(rows.begin(), rows.end(), [&](std::size_t r) {
      return y_[static_cast<Eigen::Index>(r)] == y_[static_cast<Eigen::Index>(rows.front())];
    });
    if (pure || rows.size() < params_.min_samples_split || (params_.max_depth > 0 && depth >= params_.max_depth))
      return id;

    const auto split = best_split(rows, sum);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (const auto r : rows)
      (x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Maximizes sum_l^2/n_l + sum_r^2/n_r, which is equivalent to minimizing the
  // children's summed squared error.
  Split best_split(const std::vector<std::size_t>& rows, double total) {
    const auto n_features = features_.size();
    std::size_t candidates = n_features;
    if (params_.max_features > 0 && params_.max_features < n_features) {
      // Partial Fisher-Yates: the first max_features entries are the sample.
      for (std::size_t i = 0; i < params_.max_features; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n_features - 1);
        std::swap(features_[i], features_[pick(rng_)]);
      }
      candidates = params_.max_features;
    }

    Split best;
    std::vector<std::size_t> sorted(rows);
    const double n = static_cast<double>(rows.size());
    for (std::size_t c = 0; c < candidates; ++c) {
      const int f = features_[c];
      auto value = [&](std::size_t r) { return x_(static_cast<Eigen::Index>(r), f); };
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double va = value(a), vb = value(b);
        return va < vb || (va == vb && a < b);
      });
      double left_sum = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_sum += y_[static_cast<Eigen::Index>(sorted[i])];
        const double a = value(sorted[i]);
        const double b = value(sorted[i + 1]);
        if (a == b) continue;
        const double nl = static_cast<double>(i + 1);
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / nl + right_sum * right_sum / (n - nl);
        if (score > best.score) {
          double threshold = a + (b - a) / 2.0;
          if (!(threshold >= a && threshold < b)) threshold = a;
          best = {f, threshold, i + 1, score};
        }
      }
    }
    if (params_.max_features > 0 && params_.max_features < n_features)
      std::sort(features_.begin(), features_.end());
    return best;
  }

  const FeatureMatrix& x_;
  const Eigen::VectorXd& y_;
  TreeParams params_;
  Rng& rng_;
  std::vector<int> features_;
  std::vector<RegressionTree::Node> nodes_;
};

}  // namespace

RegressionTree RegressionTree::fit(const FeatureMatrix& x, const Eigen::VectorXd& y,
                                   std::vector<std::size_t> sample_rows, const TreeParams& params,
                                   std::mt19937_64& rng) {
  if (sample_rows.empty()) throw DataError("regression tree on an empty sample");
  if (params.min_samples_split < 2) throw ContractError("min_samples_split must be at least 2");
  TreeBuilder<std::mt19937_64> builder(x, y, params, rng);
  return RegressionTree(builder.build(std::move(sample_rows)));
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::int32_t i = 0;
  while (nodes_[i].feature >= 0) i = x[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
  return nodes_[i].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes_[i].feature >= 0) {
      stack.emplace_back(nodes_[i].left, d + 1);
      stack.emplace_back(nodes_[i].right, d + 1);
    }
  }
  return deepest;
}

RandomForest RandomForest::fit(const FeatureMatrix& x, const Eigen::VectorXd& y, const ForestParams& params) {
  if (x.rows() == 0) throw DataError("random forest on an empty dataset");
  if (x.rows() != y.size()) throw ContractError("random forest: row and label counts differ");
  if (params.trees < 1) throw ContractError("random forest needs at least one tree");

  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<RegressionTree> trees;
  trees.reserve(params.trees);
  for (std::size_t t = 0; t < params.trees; ++t) {
    // Each tree draws from its own stream so trees are independent of build order.
    std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees.push_back(RegressionTree::fit(x, y, std::move(rows), params.tree, rng));
  }
  return RandomForest(std::move(trees));
}

std::vector<double> RandomForest::tree_predictions(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) out.push_back(t.predict(x));
  return out;
}

double RandomForest::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double sum = 0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

}  // namespace daepos
