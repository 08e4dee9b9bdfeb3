#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "daepos/dae_dataset.hpp"
#include "daepos/error.hpp"
#include "daepos/signature.hpp"
#include "daepos/synthgen.hpp"
#include "test_support.hpp"

using namespace daepos;

TEST_CASE("true_error") {
  CHECK(true_error(Position2D{1.5, -2}, Position2D{1.5, -2}) == 0.0);
  CHECK(true_error(Position2D{0, 0}, Position2D{3, 4}) == 5.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 100; ++i) {
    const Position2D a{u(rng), u(rng)}, b{u(rng), u(rng)};
    CHECK(true_error(a, b) == true_error(b, a));
    CHECK(true_error(a, b) >= 0.0);
  }
}

TEST_CASE("make_fold_plan: balanced, exhaustive, seeded") {
  const std::vector<std::string> ids{"a", "b", "c", "d", "e", "f"};
  const auto plan = make_fold_plan(ids, 3, 11);
  std::map<std::size_t, int> sizes;
  for (const auto f : plan.assignment) ++sizes[f];
  CHECK(sizes == std::map<std::size_t, int>{{0, 2}, {1, 2}, {2, 2}});
  CHECK(make_fold_plan(ids, 3, 11).assignment == plan.assignment);

  bool differs = false;
  for (std::uint64_t s = 12; s < 20 && !differs; ++s) differs = make_fold_plan(ids, 3, s).assignment != plan.assignment;
  CHECK(differs);

  CHECK_THROWS_AS(make_fold_plan(ids, 1, 0), ConfigError);
  CHECK_THROWS_AS(make_fold_plan(ids, 7, 0), ConfigError);
}

TEST_CASE("make_fold_plan: by_point keeps sibling scans together") {
  std::vector<std::string> ids;
  for (int p = 0; p < 4; ++p)
    for (int s = 0; s < 3; ++s) ids.push_back("P" + std::to_string(p));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto plan = make_fold_plan(ids, 2, seed, Grouping::by_point);
    std::map<std::string, std::set<std::size_t>> folds_of;
    for (std::size_t i = 0; i < ids.size(); ++i) folds_of[ids[i]].insert(plan.assignment[i]);
    for (const auto& [id, folds] : folds_of) CHECK(folds.size() == 1);
    CHECK(plan.members(0).size() == 6);
  }
  CHECK_THROWS_AS(make_fold_plan(ids, 5, 0, Grouping::by_point), ConfigError);
}

TEST_CASE("build_dae_dataset: coverage, no leakage, feature layout") {
  std::mt19937_64 rng(31);
  const auto sigs = test::random_signatures(rng, 60, 12, 0.6);
  const auto reg = build_registry(sigs, 8);
  const auto plan = make_fold_plan(sigs, 5, 3);

  for (const auto variant : {Variant::plain, Variant::xy}) {
    const auto ds = build_dae_dataset(sigs, reg, plan, variant);
    REQUIRE(ds.records.size() == sigs.size());
    CHECK(ds.width() == reg.size() + (variant == Variant::xy ? 2 : 0));
    std::set<std::size_t> seen;
    std::size_t last_fold = 0;
    for (const auto& r : ds.records) {
      seen.insert(r.signature_index);
      CHECK(r.fold == plan.assignment[r.signature_index]);
      CHECK(r.fold >= last_fold);
      last_fold = r.fold;
      CHECK(std::isfinite(r.label));
      CHECK(r.label >= 0.0);
      CHECK(r.label == doctest::Approx(true_error(r.estimate, sigs[r.signature_index].reference)));
      CHECK(r.neighbor_signatures.size() == 4);
      for (const auto n : r.neighbor_signatures) {
        CHECK(n != r.signature_index);
        CHECK(plan.assignment[n] != r.fold);
      }
      if (variant == Variant::xy) {
        CHECK(r.features[static_cast<Eigen::Index>(reg.size())] == r.estimate.x);
        CHECK(r.features[static_cast<Eigen::Index>(reg.size() + 1)] == r.estimate.y);
      }
      CHECK(r.features.head(static_cast<Eigen::Index>(reg.size())) == vectorize(sigs[r.signature_index], reg));
    }
    CHECK(seen.size() == sigs.size());
  }
}

TEST_CASE("build_dae_dataset: deterministic output bytes") {
  std::mt19937_64 rng(77);
  const auto sigs = test::random_signatures(rng, 50, 10, 0.6, false);
  const auto reg = build_registry(sigs, 6);
  auto render = [&] {
    std::ostringstream out;
    write_dae_dataset(out, build_dae_dataset(sigs, reg, make_fold_plan(sigs, 4, 9), Variant::xy), "c");
    return out.str();
  };
  CHECK(render() == render());
}

TEST_CASE("build_dae_dataset: noise-free twins give zero error with k = 1") {
  SynthWorld world = make_office_world(10, 10, 12, 5);
  world.shadowing_sigma = 0;
  const auto sigs = generate_grid_dataset(world, {{0, 0}, 5, 5, 2.0}, 2);
  // Scan s of every point goes to fold s, so each test scan's twin is in the map.
  FoldPlan plan;
  plan.n_folds = 2;
  for (std::size_t i = 0; i < sigs.size(); ++i) plan.assignment.push_back(i % 2);
  const auto reg = build_registry(sigs, 35);
  const auto ds = build_dae_dataset(sigs, reg, plan, Variant::plain, {1, -99.0, NeighborWeighting::uniform});
  for (const auto& r : ds.records) CHECK(r.label == 0.0);
  CHECK(ds.mean_label() == 0.0);
}

TEST_CASE("build_dae_dataset: error paths") {
  std::mt19937_64 rng(1);
  const auto sigs = test::random_signatures(rng, 6, 4);
  const auto reg = build_registry(sigs, 4);
  const auto plan = make_fold_plan(sigs, 2, 0);
  try {
    build_dae_dataset(sigs, reg, plan, Variant::plain, {4, -99.0, NeighborWeighting::uniform});
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("fold 0") != std::string::npos);
  }
  FoldPlan short_plan = plan;
  short_plan.assignment.pop_back();
  CHECK_THROWS_AS(build_dae_dataset(sigs, reg, short_plan, Variant::plain), ContractError);
}

TEST_CASE("build_holdout_records localizes against the whole map") {
  std::mt19937_64 rng(8);
  const auto map = test::random_signatures(rng, 30, 8);
  const auto user = test::random_signatures(rng, 7, 8);
  const auto reg = build_registry(map, 6);
  const auto ds = build_holdout_records(map, reg, user, Variant::xy);
  REQUIRE(ds.records.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    const auto est = localize(vectorize(user[i], reg), RadioMap::from_signatures(map, reg), 4);
    CHECK(ds.records[i].estimate == est.position);
    CHECK(ds.records[i].fold == 0);
  }
}

TEST_CASE("DAE dataset CSV round trip") {
  std::mt19937_64 rng(10);
  const auto sigs = test::random_signatures(rng, 30, 8, 0.7, false);
  const auto reg = build_registry(sigs, 5);
  const auto ds = build_dae_dataset(sigs, reg, make_fold_plan(sigs, 3, 1), Variant::xy);
  std::ostringstream out;
  write_dae_dataset(out, ds, "hash");
  std::istringstream in(out.str());
  const auto back = read_dae_dataset(in);
  CHECK(back.variant == Variant::xy);
  CHECK(back.registry.aps == reg.aps);
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(back.records[i].features == ds.records[i].features);
    CHECK(back.records[i].label == ds.records[i].label);
    CHECK(back.records[i].fold == ds.records[i].fold);
    CHECK(back.records[i].point_id == ds.records[i].point_id);
  }
  std::istringstream bad("point_id,x,y\n");
  CHECK_THROWS_AS(read_dae_dataset(bad), FormatError);
}
