#include "daepos/models/linear.hpp"

#include <Eigen/QR>

#include "daepos/error.hpp"

namespace daepos {

LinearModel LinearModel::fit(const FeatureMatrix& x, const Eigen::VectorXd& y) {
  if (x.rows() == 0) throw DataError("linear regression on an empty dataset");
  if (x.rows() != y.size()) throw ContractError("linear regression: row and label counts differ");

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  // Relative pivot threshold; duplicated or all-fill columns are near-singular, not exactly so.
  cod.setThreshold(1e-10);
  cod.compute(xc);
  Eigen::VectorXd w = cod.solve(yc);
  const double intercept = y_mean - x_mean.dot(w);
  return LinearModel(std::move(w), intercept, cod.rank() < xc.cols());
}

}  // namespace daepos
