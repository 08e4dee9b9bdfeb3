#include "daepos/models/knn.hpp"

#include "daepos/error.hpp"
#include "daepos/positioning.hpp"

namespace daepos {

KnnRegressor::KnnRegressor(FeatureMatrix x, Eigen::VectorXd y, std::size_t k)
    : x_(std::move(x)), y_(std::move(y)), k_(k) {
  if (k_ < 1) throw ContractError("knn regression: k must be at least 1");
  if (x_.rows() != y_.size()) throw ContractError("knn regression: row and label counts differ");
  if (static_cast<std::size_t>(x_.rows()) < k_)
    throw DataError("knn regression: fewer training rows than k");
}

double KnnRegressor::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto nearest = nearest_rows(x_, x, k_);
  double sum = 0;
  for (const auto i : nearest) sum += y_[static_cast<Eigen::Index>(i)];
  return sum / static_cast<double>(k_);
}

}  // namespace daepos
