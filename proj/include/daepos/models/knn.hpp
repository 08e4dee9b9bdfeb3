#pragma once

#include <Eigen/Core>

#include "daepos/types.hpp"

namespace daepos {

// k-nearest-neighbour regression over raw features: unweighted mean of the k
// nearest training labels (Euclidean distance, ties to the lower row index).
class KnnRegressor {
 public:
  KnnRegressor() = default;
  KnnRegressor(FeatureMatrix x, Eigen::VectorXd y, std::size_t k);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const FeatureMatrix& samples() const noexcept { return x_; }
  const Eigen::VectorXd& targets() const noexcept { return y_; }
  std::size_t k() const noexcept { return k_; }

 private:
  FeatureMatrix x_;
  Eigen::VectorXd y_;
  std::size_t k_ = kDefaultK;
};

}  // namespace daepos
