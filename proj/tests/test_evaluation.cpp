#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "daepos/error.hpp"
#include "daepos/evaluation.hpp"
#include "daepos/signature.hpp"
#include "test_support.hpp"

using namespace daepos;

namespace {
std::vector<ErrorPair> random_pairs(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<ErrorPair> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({u(rng), u(rng), "p" + std::to_string(i)});
  return out;
}
}  // namespace

TEST_CASE("dae_error sign convention") {
  CHECK(dae_error({1.2, 1.2, "a"}) == 0.0);
  CHECK(dae_error({1.0, 1.5, "a"}) == doctest::Approx(0.5));
  CHECK(dae_error({1.0, 0.2, "a"}) == doctest::Approx(-0.8));
}

TEST_CASE("summarize: hand-computed values") {
  const auto r = summarize({{1.0, 2.0, "a"}, {2.0, 1.0, "b"}}, "LR", "-");
  CHECK(r.mae == 1.0);
  CHECK(r.mse == 1.0);
  REQUIRE(r.ecdf.size() == 2);
  CHECK(r.ecdf[0].value == -1.0);
  CHECK(r.ecdf[0].fraction == 0.5);
  CHECK(r.ecdf[1].fraction == 1.0);

  const auto perfect = summarize({{0.5, 0.5, "a"}, {1.5, 1.5, "b"}, {3, 3, "c"}});
  CHECK(perfect.mae == 0.0);
  CHECK(perfect.mse == 0.0);
  REQUIRE(perfect.ecdf.size() == 1);
  CHECK(perfect.ecdf[0].value == 0.0);
  CHECK(perfect.ecdf[0].fraction == 1.0);
  REQUIRE(perfect.pearson.has_value());
  CHECK(*perfect.pearson == doctest::Approx(1.0));

  CHECK_THROWS_AS(summarize({}), DataError);
}

TEST_CASE("pearson: reference values and undefined cases") {
  const std::vector<double> a{1, 2, 3}, b{1, 2, 4};
  CHECK(*pearson(a, b) == doctest::Approx(0.9819805060619656).epsilon(1e-14));
  const std::vector<double> c{0.5, 1.2, 2.0, 3.1, 0.7}, d{0.9, 1.0, 1.4, 2.2, 1.1};
  CHECK(*pearson(c, d) == doctest::Approx(0.954148488659847).epsilon(1e-14));
  const std::vector<double> flat{2, 2, 2};
  CHECK_FALSE(pearson(a, flat).has_value());
  CHECK_FALSE(pearson(std::vector<double>{1}, std::vector<double>{2}).has_value());
  CHECK_FALSE(summarize({{1, 2, "a"}, {1, 3, "b"}}).pearson.has_value());
}

TEST_CASE("report invariants over random pairs") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    auto pairs = random_pairs(rng, 1 + trial % 40);
    if (trial % 5 == 0)
      for (auto& p : pairs) p.delta_est = std::round(p.delta_est);  // force ties
    const auto r = summarize(pairs);
    CHECK(r.mae >= 0.0);
    CHECK(r.mae <= std::sqrt(r.mse) + 1e-15);
    REQUIRE_FALSE(r.ecdf.empty());
    CHECK(r.ecdf.back().fraction == 1.0);
    const auto errors = r.signed_errors();
    CHECK(r.ecdf.back().value == *std::max_element(errors.begin(), errors.end()));
    for (std::size_t i = 1; i < r.ecdf.size(); ++i) {
      CHECK(r.ecdf[i].value > r.ecdf[i - 1].value);
      CHECK(r.ecdf[i].fraction > r.ecdf[i - 1].fraction);
    }
    // Right-continuity: each fraction counts the samples <= its value.
    for (const auto& e : r.ecdf) {
      const auto count = std::count_if(errors.begin(), errors.end(), [&](double v) { return v <= e.value; });
      CHECK(e.fraction == static_cast<double>(count) / static_cast<double>(errors.size()));
    }
  }
}

TEST_CASE("pearson is invariant under positive affine maps") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 5), scale(0.1, 10), shift(-5, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = u(rng);
      b[i] = 0.5 * a[i] + u(rng);
    }
    const double r = *pearson(a, b);
    const double s = scale(rng), t = shift(rng);
    auto a2 = a;
    for (auto& v : a2) v = s * v + t;
    CHECK(*pearson(a2, b) == doctest::Approx(r).epsilon(1e-10));
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK_THROWS_AS(median({}), DataError);
}

TEST_CASE("cross_fit: coverage and no record seen by its own model") {
  std::mt19937_64 rng(17);
  const auto sigs = test::random_signatures(rng, 80, 10, 0.6, false);
  const auto reg = build_registry(sigs, 8);
  const auto ds = build_dae_dataset(sigs, reg, make_fold_plan(sigs, 5, 2), Variant::xy);

  ModelSpec spec;
  spec.family = ModelFamily::knn;
  spec.k = 1;
  std::size_t calls = 0;
  EvaluationOptions opts;
  opts.on_fold = [&](std::size_t fold, std::span<const std::size_t> train, std::span<const std::size_t> test) {
    ++calls;
    std::set<std::size_t> tr(train.begin(), train.end());
    for (const auto t : test) {
      CHECK(tr.count(t) == 0);
      CHECK(ds.records[t].fold == fold);
    }
    CHECK(train.size() + test.size() == ds.records.size());
  };
  const auto report = evaluate_cross_fit(spec, ds, opts);
  CHECK(calls == 5);
  CHECK(report.pairs.size() == ds.records.size());
  CHECK(std::isfinite(report.mae));
  CHECK(report.mae > 0.0);
  CHECK(report.label == "kNN-xy");
  CHECK(report.protocol == "cross_fit");
  for (std::size_t i = 0; i < ds.records.size(); ++i) CHECK(report.pairs[i].delta_pos == ds.records[i].label);
}

TEST_CASE("cross_fit: raw predictions flag") {
  std::mt19937_64 rng(5);
  const auto sigs = test::random_signatures(rng, 60, 8, 0.6, false);
  const auto reg = build_registry(sigs, 6);
  const auto ds = build_dae_dataset(sigs, reg, make_fold_plan(sigs, 3, 2), Variant::plain);
  ModelSpec lin;
  lin.family = ModelFamily::linear;
  EvaluationOptions raw;
  raw.raw_predictions = true;
  const auto clamped = evaluate_cross_fit(lin, ds);
  const auto unclamped = evaluate_cross_fit(lin, ds, raw);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(clamped.pairs[i].delta_est >= 0.0);
    CHECK(clamped.pairs[i].delta_est == std::max(unclamped.pairs[i].delta_est, 0.0));
  }
}

TEST_CASE("holdout: width mismatch is a contract error") {
  std::mt19937_64 rng(9);
  const auto sigs = test::random_signatures(rng, 40, 8, 0.6, false);
  const auto reg = build_registry(sigs, 6);
  const auto plain = build_dae_dataset(sigs, reg, make_fold_plan(sigs, 4, 2), Variant::plain);
  const auto xy = build_dae_dataset(sigs, reg, make_fold_plan(sigs, 4, 2), Variant::xy);
  ModelSpec spec;
  spec.family = ModelFamily::forest;
  spec.trees = 10;
  const auto model = fit(spec, plain);
  CHECK_THROWS_AS(evaluate_holdout(model, xy, Variant::xy), ContractError);
  const auto report = evaluate_holdout(model, plain, Variant::plain);
  CHECK(report.protocol == "holdout");
  CHECK(report.pairs.size() == plain.records.size());
}

TEST_CASE("report writers") {
  auto r = summarize({{1.0, 2.0, "a"}, {2.0, 1.0, "b"}}, "NN", "[128, 128, 128]");
  std::ostringstream table, pairs, cdf, corr;
  write_report_table(table, std::vector<EvaluationReport>{r}, "hdr");
  CHECK(table.str() == "# hdr\nalgorithm,parameters,MAE,MSE\nNN,\"[128, 128, 128]\",1.000,1.000\n");
  write_pairs(pairs, r);
  CHECK(pairs.str() == "point_id,delta_pos,delta_est\na,1,2\nb,2,1\n");
  write_ecdf(cdf, r);
  CHECK(cdf.str() == "signed_error,fraction\n-1,0.5\n1,1\n");
  write_correlation_table(corr, std::vector<EvaluationReport>{r});
  CHECK(corr.str() == "algorithm,parameters,pearson\nNN,\"[128, 128, 128]\",-1.0000\n");
}
