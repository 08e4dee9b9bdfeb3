#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "daepos/positioning.hpp"
#include "daepos/types.hpp"

namespace daepos {

/// Euclidean distance between a position estimate and the reference position.
template <typename Scalar>
Scalar true_error(const BasicPosition2D<Scalar>& estimate, const BasicPosition2D<Scalar>& reference) {
  return distance(estimate, reference);
}

struct FoldPlan {
  std::size_t n_folds = 0;
  std::vector<std::size_t> assignment;  // fold index per signature
  std::uint64_t seed = 0;
  Grouping grouping = Grouping::by_signature;

  std::vector<std::size_t> members(std::size_t fold) const;
};

/// Uniform random partition of `point_ids.size()` signatures into `n_folds`
/// folds. Under by_signature the signatures are dealt round-robin after a seeded
/// shuffle, so fold sizes differ by at most one. Under by_point the same is done
/// with distinct point ids, keeping sibling scans together (fold sizes then
/// differ by at most one point).
FoldPlan make_fold_plan(std::span<const std::string> point_ids, std::size_t n_folds, std::uint64_t seed,
                        Grouping grouping = Grouping::by_signature);

// Convenience overload for signatures.
FoldPlan make_fold_plan(std::span<const RadioSignature> signatures, std::size_t n_folds, std::uint64_t seed,
                        Grouping grouping = Grouping::by_signature);

struct DaeRecord {
  FeatureVector features;
  double label = 0;  // true positioning error, meters
  std::string point_id;
  std::size_t fold = 0;
  std::size_t signature_index = 0;
  Position2D estimate;
  // Signature indices of the map entries used to localize this record.
  std::vector<std::size_t> neighbor_signatures;
};

struct DaeDataset {
  std::vector<DaeRecord> records;
  Variant variant = Variant::plain;
  ApRegistry registry;

  std::size_t width() const { return records.empty() ? 0 : static_cast<std::size_t>(records.front().features.size()); }
  FeatureMatrix features() const;
  Eigen::VectorXd labels() const;
  double mean_label() const;
};

struct LocalizationOptions {
  std::size_t k = kDefaultK;
  double fill = kDefaultFillDbm;
  NeighborWeighting weighting = NeighborWeighting::uniform;
};

/// Leave-fold-out labelling: for every fold, the remaining signatures form the
/// radio map, each fold member is localized with k-NN and labelled with its true
/// error. Records are ordered by fold, then by signature index.
DaeDataset build_dae_dataset(std::span<const RadioSignature> signatures, const ApRegistry& registry,
                             const FoldPlan& plan, Variant variant, const LocalizationOptions& options = {});

/// Labels external signatures (e.g. a user survey) against a map made of all of
/// `map_signatures`. Fold indices of the returned records are 0.
DaeDataset build_holdout_records(std::span<const RadioSignature> map_signatures, const ApRegistry& registry,
                                 std::span<const RadioSignature> queries, Variant variant,
                                 const LocalizationOptions& options = {});

/// CSV: point_id,fold,<ap...>[,x_est,y_est],delta_pos
void write_dae_dataset(std::ostream& out, const DaeDataset& dataset, const std::string& comment = {});

/// Reads the CSV written by write_dae_dataset. Registry availability is not
/// stored in the file and is left empty.
DaeDataset read_dae_dataset(std::istream& in);

}  // namespace daepos
