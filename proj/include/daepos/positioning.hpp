#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "daepos/error.hpp"
#include "daepos/types.hpp"

namespace daepos {

/// Euclidean distance between two equal-length RSSI vectors (dBm).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rssi_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw ContractError("rssi_distance: vector lengths differ");
  return (a - b).norm();
}

enum class NeighborWeighting { uniform, inverse_distance };

/// Fingerprinting database: one imputed RSSI row per reference signature.
class RadioMap {
 public:
  RadioMap(ApRegistry registry, FeatureMatrix fingerprints, std::vector<Position2D> references);

  // Vectorizes `signatures` against `registry` with the given fill value.
  static RadioMap from_signatures(std::span<const RadioSignature> signatures, ApRegistry registry,
                                  double fill = kDefaultFillDbm);

  const ApRegistry& registry() const noexcept { return registry_; }
  const FeatureMatrix& fingerprints() const noexcept { return fingerprints_; }
  const std::vector<Position2D>& references() const noexcept { return references_; }
  std::size_t size() const noexcept { return references_.size(); }
  std::size_t width() const noexcept { return static_cast<std::size_t>(fingerprints_.cols()); }

 private:
  ApRegistry registry_;
  FeatureMatrix fingerprints_;
  std::vector<Position2D> references_;
};

struct PositionEstimate {
  Position2D position;
  std::vector<std::size_t> neighbor_indices;  // into the map, nearest first
  std::vector<double> neighbor_distances;     // ascending
};

/// Indices of the k rows of `rows` nearest to `query`, nearest first. Equal
/// distances are ordered by row index.
std::vector<std::size_t> nearest_rows(const FeatureMatrix& rows, const Eigen::Ref<const Eigen::VectorXd>& query,
                                      std::size_t k, std::vector<double>* distances = nullptr);

/// k-NN fingerprinting: the estimate is the mean of the k nearest reference
/// positions (or their inverse-distance weighted mean).
PositionEstimate localize(const FeatureVector& query, const RadioMap& map, std::size_t k = kDefaultK,
                          NeighborWeighting weighting = NeighborWeighting::uniform);

}  // namespace daepos
