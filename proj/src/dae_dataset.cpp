#include "daepos/dae_dataset.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "csv_util.hpp"
#include "daepos/error.hpp"
#include "daepos/signature.hpp"

namespace daepos {

std::vector<std::size_t> FoldPlan::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(i);
  return out;
}

FoldPlan make_fold_plan(std::span<const std::string> point_ids, std::size_t n_folds, std::uint64_t seed,
                        Grouping grouping) {
  if (n_folds < 2) throw ConfigError("at least 2 folds are required to separate map and test signatures");

  // Group signatures into partition units: one per signature or one per point.
  std::vector<std::size_t> unit_of(point_ids.size());
  std::size_t n_units = 0;
  if (grouping == Grouping::by_signature) {
    std::iota(unit_of.begin(), unit_of.end(), std::size_t{0});
    n_units = point_ids.size();
  } else {
    std::map<std::string_view, std::size_t> ids;
    for (std::size_t i = 0; i < point_ids.size(); ++i) {
      const auto [it, inserted] = ids.emplace(point_ids[i], ids.size());
      unit_of[i] = it->second;
    }
    n_units = ids.size();
  }
  if (n_folds > n_units)
    throw ConfigError(fmt::format("{} folds requested but only {} {} available", n_folds, n_units,
                                  grouping == Grouping::by_point ? "points" : "signatures"));

  std::vector<std::size_t> order(n_units);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> unit_fold(n_units);
  for (std::size_t pos = 0; pos < n_units; ++pos) unit_fold[order[pos]] = pos % n_folds;

  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.grouping = grouping;
  plan.assignment.resize(point_ids.size());
  for (std::size_t i = 0; i < point_ids.size(); ++i) plan.assignment[i] = unit_fold[unit_of[i]];
  return plan;
}

FoldPlan make_fold_plan(std::span<const RadioSignature> signatures, std::size_t n_folds, std::uint64_t seed,
                        Grouping grouping) {
  std::vector<std::string> ids;
  ids.reserve(signatures.size());
  for (const auto& s : signatures) ids.push_back(s.point_id);
  return make_fold_plan(ids, n_folds, seed, grouping);
}

FeatureMatrix DaeDataset::features() const {
  FeatureMatrix m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(width()));
  for (std::size_t i = 0; i < records.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = records[i].features.transpose();
  return m;
}

Eigen::VectorXd DaeDataset::labels() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) y[static_cast<Eigen::Index>(i)] = records[i].label;
  return y;
}

double DaeDataset::mean_label() const {
  if (records.empty()) throw DataError("mean label of an empty DAE dataset");
  return labels().mean();
}

namespace {

DaeRecord make_record(const RadioSignature& sig, std::size_t index, std::size_t fold, const RadioMap& map,
                      std::span<const std::size_t> map_to_signature, Variant variant,
                      const LocalizationOptions& options) {
  const auto rssi = vectorize(sig, map.registry(), options.fill);
  const auto est = localize(rssi, map, options.k, options.weighting);
  DaeRecord rec;
  rec.features = variant == Variant::xy ? append_position(rssi, est.position) : rssi;
  rec.label = true_error(est.position, sig.reference);
  rec.point_id = sig.point_id;
  rec.fold = fold;
  rec.signature_index = index;
  rec.estimate = est.position;
  for (const auto j : est.neighbor_indices) rec.neighbor_signatures.push_back(map_to_signature[j]);
  return rec;
}

}  // namespace

DaeDataset build_dae_dataset(std::span<const RadioSignature> signatures, const ApRegistry& registry,
                             const FoldPlan& plan, Variant variant, const LocalizationOptions& options) {
  if (plan.assignment.size() != signatures.size())
    throw ContractError(fmt::format("fold plan covers {} signatures, dataset has {}", plan.assignment.size(),
                                    signatures.size()));
  if (registry.empty()) throw ContractError("empty AP registry");

  DaeDataset out;
  out.variant = variant;
  out.registry = registry;
  out.records.reserve(signatures.size());
  for (std::size_t fold = 0; fold < plan.n_folds; ++fold) {
    std::vector<RadioSignature> map_sigs;
    std::vector<std::size_t> map_index;
    for (std::size_t i = 0; i < signatures.size(); ++i) {
      if (plan.assignment[i] != fold) {
        map_sigs.push_back(signatures[i]);
        map_index.push_back(i);
      }
    }
    if (map_sigs.size() < options.k)
      throw DataError(fmt::format("fold {}: radio map has {} signatures, fewer than k = {}", fold, map_sigs.size(),
                                  options.k));
    const auto map = RadioMap::from_signatures(map_sigs, registry, options.fill);
    for (std::size_t i = 0; i < signatures.size(); ++i)
      if (plan.assignment[i] == fold)
        out.records.push_back(make_record(signatures[i], i, fold, map, map_index, variant, options));
  }
  return out;
}

DaeDataset build_holdout_records(std::span<const RadioSignature> map_signatures, const ApRegistry& registry,
                                 std::span<const RadioSignature> queries, Variant variant,
                                 const LocalizationOptions& options) {
  if (map_signatures.size() < options.k)
    throw DataError(fmt::format("radio map has {} signatures, fewer than k = {}", map_signatures.size(), options.k));
  const auto map = RadioMap::from_signatures(map_signatures, registry, options.fill);
  std::vector<std::size_t> identity(map_signatures.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});

  DaeDataset out;
  out.variant = variant;
  out.registry = registry;
  for (std::size_t i = 0; i < queries.size(); ++i)
    out.records.push_back(make_record(queries[i], i, 0, map, identity, variant, options));
  return out;
}

void write_dae_dataset(std::ostream& out, const DaeDataset& dataset, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "point_id,fold";
  for (const auto& ap : dataset.registry.aps) out << ',' << ap;
  if (dataset.variant == Variant::xy) out << ",x_est,y_est";
  out << ",delta_pos\n";
  for (const auto& r : dataset.records) {
    out << r.point_id << ',' << r.fold;
    for (Eigen::Index j = 0; j < r.features.size(); ++j) out << ',' << fmt::format("{}", r.features[j]);
    out << ',' << fmt::format("{}", r.label) << '\n';
  }
}

DaeDataset read_dae_dataset(std::istream& in) {
  std::string line;
  std::string header;
  while (std::getline(in, line)) {
    if (detail::is_comment_or_blank(line)) continue;
    header = line;
    break;
  }
  if (header.empty()) throw DataError("empty DAE dataset file");
  const auto cols = detail::split_csv(header);
  if (cols.size() < 4 || cols[0] != "point_id" || cols[1] != "fold" || cols.back() != "delta_pos")
    throw FormatError("DAE dataset header must be point_id,fold,<features...>,delta_pos");

  DaeDataset ds;
  std::size_t n_features = cols.size() - 3;
  std::size_t n_aps = n_features;
  if (n_features >= 2 && cols[cols.size() - 3] == "x_est" && cols[cols.size() - 2] == "y_est") {
    ds.variant = Variant::xy;
    n_aps -= 2;
  }
  for (std::size_t j = 0; j < n_aps; ++j) ds.registry.aps.emplace_back(cols[j + 2]);

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::is_comment_or_blank(line)) continue;
    ++row;
    const auto cells = detail::split_csv(line);
    if (cells.size() != cols.size())
      throw RowError(row, fmt::format("expected {} cells, found {}", cols.size(), cells.size()));
    DaeRecord r;
    r.point_id = std::string(cells[0]);
    const auto fold = detail::parse_double(cells[1]);
    if (!fold || *fold < 0) throw RowError(row, "bad fold index");
    r.fold = static_cast<std::size_t>(*fold);
    r.signature_index = row - 1;
    r.features.resize(static_cast<Eigen::Index>(n_features));
    for (std::size_t j = 0; j < n_features; ++j) {
      const auto v = detail::parse_double(cells[j + 2]);
      if (!v || !std::isfinite(*v)) throw RowError(row, fmt::format("non-numeric feature in column {}", j + 3));
      r.features[static_cast<Eigen::Index>(j)] = *v;
    }
    const auto label = detail::parse_double(cells.back());
    if (!label || !std::isfinite(*label) || *label < 0) throw RowError(row, "delta_pos must be finite and >= 0");
    r.label = *label;
    if (ds.variant == Variant::xy)
      r.estimate = {r.features[static_cast<Eigen::Index>(n_aps)], r.features[static_cast<Eigen::Index>(n_aps + 1)]};
    ds.records.push_back(std::move(r));
  }
  if (ds.records.empty()) throw DataError("DAE dataset file has no records");
  return ds;
}

}  // namespace daepos
