#include "daepos/positioning.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "daepos/signature.hpp"

namespace daepos {

RadioMap::RadioMap(ApRegistry registry, FeatureMatrix fingerprints, std::vector<Position2D> references)
    : registry_(std::move(registry)), fingerprints_(std::move(fingerprints)), references_(std::move(references)) {
  if (static_cast<std::size_t>(fingerprints_.rows()) != references_.size())
    throw ContractError("radio map: fingerprint and reference counts differ");
  if (static_cast<std::size_t>(fingerprints_.cols()) != registry_.size())
    throw ContractError("radio map: fingerprint width differs from registry size");
}

RadioMap RadioMap::from_signatures(std::span<const RadioSignature> signatures, ApRegistry registry, double fill) {
  std::vector<Position2D> refs;
  refs.reserve(signatures.size());
  for (const auto& s : signatures) refs.push_back(s.reference);
  auto fingerprints = vectorize_all(signatures, registry, fill);
  return RadioMap(std::move(registry), std::move(fingerprints), std::move(refs));
}

std::vector<std::size_t> nearest_rows(const FeatureMatrix& rows, const Eigen::Ref<const Eigen::VectorXd>& query,
                                      std::size_t k, std::vector<double>* distances) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (k < 1) throw ContractError("k must be at least 1");
  if (query.size() != rows.cols())
    throw ContractError(fmt::format("query width {} does not match map width {}", query.size(), rows.cols()));
  if (n < k) throw DataError(fmt::format("need at least {} reference rows, have {}", k, n));

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i)
    sq[i] = (rows.row(static_cast<Eigen::Index>(i)).transpose() - query).squaredNorm();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return sq[a] < sq[b] || (sq[a] == sq[b] && a < b); });
  order.resize(k);
  if (distances) {
    distances->clear();
    for (const auto i : order) distances->push_back(std::sqrt(sq[i]));
  }
  return order;
}

PositionEstimate localize(const FeatureVector& query, const RadioMap& map, std::size_t k,
                          NeighborWeighting weighting) {
  PositionEstimate est;
  est.neighbor_indices = nearest_rows(map.fingerprints(), query, k, &est.neighbor_distances);

  const auto& refs = map.references();
  if (weighting == NeighborWeighting::inverse_distance && est.neighbor_distances.front() > 0.0) {
    double wsum = 0, x = 0, y = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = 1.0 / est.neighbor_distances[j];
      const auto& p = refs[est.neighbor_indices[j]];
      x += w * p.x;
      y += w * p.y;
      wsum += w;
    }
    est.position = {x / wsum, y / wsum};
    return est;
  }

  // Uniform mean; with inverse-distance weights, exact matches take all the weight.
  double x = 0, y = 0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (weighting == NeighborWeighting::inverse_distance && est.neighbor_distances[j] > 0.0) break;
    const auto& p = refs[est.neighbor_indices[j]];
    x += p.x;
    y += p.y;
    ++used;
  }
  est.position = {x / static_cast<double>(used), y / static_cast<double>(used)};
  return est;
}

}  // namespace daepos
