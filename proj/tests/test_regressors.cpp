#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "daepos/error.hpp"
#include "daepos/regressors.hpp"

using namespace daepos;

namespace {

struct Data {
  FeatureMatrix x;
  Eigen::VectorXd y;
};

Data make_data(std::mt19937_64& rng, Eigen::Index n, Eigen::Index width, bool integer = false) {
  std::uniform_int_distribution<int> ifeat(-99, -30);
  std::uniform_real_distribution<double> rfeat(-99.0, -30.0);
  std::uniform_real_distribution<double> label(0.0, 4.0);
  Data d{FeatureMatrix(n, width), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < width; ++j) d.x(i, j) = integer ? ifeat(rng) : rfeat(rng);
    d.y[i] = label(rng);
  }
  return d;
}

ModelSpec spec_of(ModelFamily family) {
  ModelSpec s;
  s.family = family;
  s.trees = 20;
  s.layers = {8, 8};
  s.epochs = 20;
  s.seed = 3;
  return s;
}

// Best root split by exhaustive enumeration of feature/threshold pairs.
std::pair<int, double> brute_force_root_split(const FeatureMatrix& x, const Eigen::VectorXd& y) {
  double best_sse = std::numeric_limits<double>::infinity();
  std::pair<int, double> best{-1, 0};
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::vector<double> values(x.col(f).begin(), x.col(f).end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t t = 0; t + 1 < values.size(); ++t) {
      const double thr = (values[t] + values[t + 1]) / 2;
      double sl = 0, sr = 0, nl = 0, nr = 0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) (x(i, f) <= thr ? (sl += y[i], nl += 1) : (sr += y[i], nr += 1));
      double sse = 0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double m = x(i, f) <= thr ? sl / nl : sr / nr;
        sse += (y[i] - m) * (y[i] - m);
      }
      if (sse < best_sse - 1e-12) {
        best_sse = sse;
        best = {static_cast<int>(f), thr};
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("linear: two-point fit") {
  FeatureMatrix x(2, 1);
  x << 0, 1;
  const auto m = LinearModel::fit(x, Eigen::Vector2d(1, 3));
  CHECK(m.coefficients()[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.intercept() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(m.rank_deficient());
}

TEST_CASE("linear: exact recovery on noise-free data") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = make_data(rng, 60, 6);
    Eigen::VectorXd w(6);
    std::uniform_real_distribution<double> u(-2, 2);
    for (auto& v : w) v = u(rng);
    const double b = u(rng) * 10;
    d.y = (d.x * w).array() + b;
    const auto m = LinearModel::fit(d.x, d.y);
    CHECK((m.coefficients() - w).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(m.intercept() - b) < 1e-9);
  }
}

TEST_CASE("linear: rank-deficient design falls back to minimum norm") {
  std::mt19937_64 rng(2);
  auto d = make_data(rng, 30, 3);
  d.x.col(2) = d.x.col(0);                  // duplicate column
  d.x.col(1).setConstant(-99.0);            // AP never detected
  d.y = 0.5 * d.x.col(0).array() + 60.0;
  const auto model = fit(spec_of(ModelFamily::linear), d.x, d.y);
  CHECK(model.rank_deficient());
  const auto& lin = std::get<LinearModel>(model.model());
  CHECK(lin.coefficients()[0] == doctest::Approx(0.25));
  CHECK(lin.coefficients()[2] == doctest::Approx(0.25));
  for (Eigen::Index i = 0; i < d.x.rows(); ++i)
    CHECK(model.predict(d.x.row(i).transpose()).raw == doctest::Approx(d.y[i]));
}

TEST_CASE("knn regression matches brute-force means") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = make_data(rng, 40, 5, true);
    const std::size_t k = 1 + static_cast<std::size_t>(trial % 6);
    const KnnRegressor m(d.x, d.y, k);
    const auto q = make_data(rng, 1, 5, true).x.row(0).transpose().eval();

    std::vector<double> dist(40);
    for (Eigen::Index i = 0; i < 40; ++i) {
      double s = 0;
      for (Eigen::Index j = 0; j < 5; ++j) s += (d.x(i, j) - q[j]) * (d.x(i, j) - q[j]);
      dist[static_cast<std::size_t>(i)] = s;
    }
    std::vector<std::size_t> idx(40);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return dist[a] < dist[b]; });
    double sum = 0;
    for (std::size_t j = 0; j < k; ++j) sum += d.y[static_cast<Eigen::Index>(idx[j])];
    CHECK(m.predict(q) == sum / static_cast<double>(k));
  }
}

TEST_CASE("knn regression: exact match with k = 1 returns the label") {
  std::mt19937_64 rng(6);
  const auto d = make_data(rng, 25, 4);
  auto spec = spec_of(ModelFamily::knn);
  spec.k = 1;
  const auto m = fit(spec, d.x, d.y);
  for (Eigen::Index i = 0; i < 25; ++i) CHECK(m.predict(d.x.row(i).transpose()).estimate == d.y[i]);
}

TEST_CASE("tree: root split equals exhaustive search") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = make_data(rng, 30, 4, true);
    std::vector<std::size_t> rows(30);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto tree = RegressionTree::fit(d.x, d.y, rows, {}, rng);
    const auto [f, thr] = brute_force_root_split(d.x, d.y);
    CHECK(tree.nodes()[0].feature == f);
    CHECK(tree.nodes()[0].threshold == thr);
  }
}

TEST_CASE("tree: hand-worked stump and full-depth interpolation") {
  FeatureMatrix x(4, 1);
  x << 1, 2, 3, 10;
  const Eigen::Vector4d y(0, 0, 0, 5);
  std::mt19937_64 rng(0);
  const auto stump = RegressionTree::fit(x, y, {0, 1, 2, 3}, {1, 2, 0}, rng);
  REQUIRE(stump.nodes().size() == 3);
  CHECK(stump.nodes()[0].threshold == 6.5);
  CHECK(stump.predict(Eigen::VectorXd::Constant(1, 2.0)) == 0.0);
  CHECK(stump.predict(Eigen::VectorXd::Constant(1, 9.0)) == 5.0);

  const auto d = make_data(rng, 40, 3);
  std::vector<std::size_t> rows(40);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto full = RegressionTree::fit(d.x, d.y, rows, {}, rng);
  for (Eigen::Index i = 0; i < 40; ++i) CHECK(full.predict(d.x.row(i).transpose()) == d.y[i]);
}

TEST_CASE("forest: prediction is the mean of its trees") {
  std::mt19937_64 rng(123);
  const auto train = make_data(rng, 120, 6);
  const auto probe = make_data(rng, 50, 6);
  auto spec = spec_of(ModelFamily::forest);
  spec.trees = 37;
  const auto model = fit(spec, train.x, train.y);
  const auto& forest = std::get<RandomForest>(model.model());
  CHECK(forest.trees().size() == 37);
  for (Eigen::Index i = 0; i < probe.x.rows(); ++i) {
    const Eigen::VectorXd q = probe.x.row(i).transpose();
    const auto per_tree = forest.tree_predictions(q);
    double sum = 0;
    for (const double p : per_tree) sum += p;
    CHECK(model.predict(q).raw == sum / 37.0);
  }
}

TEST_CASE("forest: bootstrap trees differ, trees are grown to purity") {
  std::mt19937_64 rng(5);
  const auto d = make_data(rng, 80, 4);
  ForestParams p;
  p.trees = 5;
  p.seed = 1;
  const auto forest = RandomForest::fit(d.x, d.y, p);
  const Eigen::VectorXd q = d.x.row(0).transpose();
  const auto preds = forest.tree_predictions(q);
  CHECK(std::adjacent_find(preds.begin(), preds.end(), std::not_equal_to<>()) != preds.end());

  p.bootstrap = false;
  p.trees = 1;
  const auto single = RandomForest::fit(d.x, d.y, p);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) CHECK(single.predict(d.x.row(i).transpose()) == d.y[i]);

  p.tree.max_depth = 2;
  CHECK(RandomForest::fit(d.x, d.y, p).trees()[0].depth() <= 2);
}

TEST_CASE("constant targets are reproduced by every family") {
  std::mt19937_64 rng(8);
  auto d = make_data(rng, 64, 4);
  d.y.setConstant(0.85);
  for (const auto family : {ModelFamily::linear, ModelFamily::knn, ModelFamily::forest}) {
    const auto m = fit(spec_of(family), d.x, d.y);
    for (Eigen::Index i = 0; i < d.x.rows(); ++i)
      CHECK(m.predict(d.x.row(i).transpose()).raw == doctest::Approx(0.85).epsilon(1e-12));
  }
  auto net = spec_of(ModelFamily::network);
  net.epochs = 300;
  net.learning_rate = 1e-2;
  const auto m = fit(net, d.x, d.y);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) CHECK(std::abs(m.predict(d.x.row(i).transpose()).raw - 0.85) < 0.05);
}

TEST_CASE("predict clamps negative outputs at zero and keeps the raw value") {
  const ErrorRegressor model(spec_of(ModelFamily::linear), 2, LinearModel(Eigen::Vector2d::Zero(), -0.3, false));
  const auto p = model.predict(Eigen::Vector2d(-50, -60));
  CHECK(p.estimate == 0.0);
  CHECK(p.raw == -0.3);
  CHECK_THROWS_AS(model.predict(Eigen::Vector3d(-50, -60, -70)), ContractError);
}

TEST_CASE("predictions are never negative") {
  std::mt19937_64 rng(55);
  auto d = make_data(rng, 50, 3);
  // Labels that push linear fits below zero off the training range.
  d.y = (0.4 * (d.x.col(0).array() + 65.0)).cwiseMax(0.0);
  const auto probe = make_data(rng, 200, 3);
  for (const auto family : {ModelFamily::linear, ModelFamily::knn, ModelFamily::forest, ModelFamily::network}) {
    const auto m = fit(spec_of(family), d.x, d.y);
    for (const auto& p : m.predict_batch(probe.x * 1.5)) CHECK(p.estimate >= 0.0);
  }
}

TEST_CASE("fit is deterministic and model files round-trip exactly") {
  std::mt19937_64 rng(77);
  const auto d = make_data(rng, 70, 5);
  const auto probe = make_data(rng, 30, 5);
  for (const auto family : {ModelFamily::linear, ModelFamily::knn, ModelFamily::forest, ModelFamily::network}) {
    CAPTURE(to_string(family));
    const auto a = fit(spec_of(family), d.x, d.y);
    const auto b = fit(spec_of(family), d.x, d.y);
    std::stringstream file;
    save_regressor(file, a);
    const auto c = load_regressor(file);
    CHECK(c.spec() == a.spec());
    CHECK(c.input_width() == 5);
    const auto pa = a.predict_batch(probe.x), pb = b.predict_batch(probe.x), pc = c.predict_batch(probe.x);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].raw == pb[i].raw);
      CHECK(pa[i].raw == pc[i].raw);
    }
  }
}

TEST_CASE("model files: version and format checks") {
  std::mt19937_64 rng(1);
  const auto d = make_data(rng, 10, 2);
  auto j = to_json(fit(spec_of(ModelFamily::linear), d.x, d.y));
  j["version"] = 99;
  CHECK_THROWS_AS(regressor_from_json(j), DataError);
  j["version"] = 1;
  j["format"] = "other";
  CHECK_THROWS_AS(regressor_from_json(j), DataError);
  std::istringstream junk("{not json");
  CHECK_THROWS_AS(load_regressor(junk), DataError);
}

TEST_CASE("fit: error paths and spec validation") {
  CHECK_THROWS_AS(fit(spec_of(ModelFamily::forest), FeatureMatrix(0, 3), Eigen::VectorXd(0)), DataError);
  CHECK_THROWS_AS(fit(spec_of(ModelFamily::forest), DaeDataset{}), DataError);
  auto bad = spec_of(ModelFamily::network);
  bad.layers.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec_of(ModelFamily::forest);
  bad.trees = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(spec_of(ModelFamily::forest).parameters() == "trees=20");
  CHECK(spec_of(ModelFamily::network).parameters() == "[8, 8]");
}
