#pragma once

#include <Eigen/Core>

#include "daepos/types.hpp"

namespace daepos {

// Ordinary least squares with intercept. Features and targets are centered and
// the minimum-norm solution is taken, so collinear or constant columns still
// yield a valid least-squares fit; `rank_deficient` records that case.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(Eigen::VectorXd coefficients, double intercept, bool rank_deficient)
      : coefficients_(std::move(coefficients)), intercept_(intercept), rank_deficient_(rank_deficient) {}

  static LinearModel fit(const FeatureMatrix& x, const Eigen::VectorXd& y);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const { return intercept_ + coefficients_.dot(x); }

  const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }
  double intercept() const noexcept { return intercept_; }
  bool rank_deficient() const noexcept { return rank_deficient_; }

 private:
  Eigen::VectorXd coefficients_;
  double intercept_ = 0;
  bool rank_deficient_ = false;
};

}  // namespace daepos
