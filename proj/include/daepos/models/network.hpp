#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "daepos/types.hpp"

namespace daepos {

// Stack of dense layers, each followed by batch normalization and a ReLU, with
// a scalar linear output. All trainable parameters live in one flat vector so
// the optimizer and finite-difference checks can treat them uniformly.
//
// Per hidden layer the flat layout is W (out x in, column-major), b, gamma,
// beta; the output weights and bias come last.
class DenseNetwork {
 public:
  static constexpr double kBatchNormEps = 1e-5;
  static constexpr double kBatchNormMomentum = 0.1;

  DenseNetwork() = default;
  DenseNetwork(std::size_t input_width, std::vector<std::size_t> layers);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, gamma 1, beta 0.
  void initialize(std::mt19937_64& rng);

  struct BatchStats {
    std::vector<Eigen::VectorXd> mean;
    std::vector<Eigen::VectorXd> variance;  // biased
  };

  // Training-mode forward pass (batch statistics) over the columns of `inputs`;
  // returns the mean squared error against `targets`. When `gradient` is given
  // it receives d(loss)/d(parameters) in the flat layout.
  double train_loss(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                    Eigen::VectorXd* gradient = nullptr, BatchStats* stats = nullptr) const;

  // Folds one batch's statistics into the running estimates used at inference.
  void update_running_stats(const BatchStats& stats, std::size_t batch_size);

  // Inference-mode output for each column of `inputs`.
  Eigen::VectorXd predict(const Eigen::MatrixXd& inputs) const;

  std::size_t input_width() const noexcept { return input_width_; }
  const std::vector<std::size_t>& layers() const noexcept { return layers_; }

  Eigen::VectorXd& parameters() noexcept { return params_; }
  const Eigen::VectorXd& parameters() const noexcept { return params_; }
  std::vector<Eigen::VectorXd>& running_mean() noexcept { return running_mean_; }
  const std::vector<Eigen::VectorXd>& running_mean() const noexcept { return running_mean_; }
  std::vector<Eigen::VectorXd>& running_var() noexcept { return running_var_; }
  const std::vector<Eigen::VectorXd>& running_var() const noexcept { return running_var_; }

 private:
  struct LayerOffsets {
    std::size_t in, out, w, b, gamma, beta;
  };

  std::size_t input_width_ = 0;
  std::vector<std::size_t> layers_;
  std::vector<LayerOffsets> offsets_;
  std::size_t output_w_ = 0;
  std::size_t output_b_ = 0;
  Eigen::VectorXd params_;
  std::vector<Eigen::VectorXd> running_mean_;
  std::vector<Eigen::VectorXd> running_var_;
};

struct NetworkParams {
  std::vector<std::size_t> layers{128, 128, 128};
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

// Network plus the input standardization learned from the training set.
class NetworkRegressor {
 public:
  NetworkRegressor() = default;
  NetworkRegressor(DenseNetwork net, Eigen::VectorXd input_mean, Eigen::VectorXd input_scale)
      : net_(std::move(net)), mean_(std::move(input_mean)), scale_(std::move(input_scale)) {}

  // Adam on mean squared error with mini-batches reshuffled every epoch.
  static NetworkRegressor fit(const FeatureMatrix& x, const Eigen::VectorXd& y, const NetworkParams& params);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict_batch(const FeatureMatrix& x) const;

  const DenseNetwork& network() const noexcept { return net_; }
  const Eigen::VectorXd& input_mean() const noexcept { return mean_; }
  const Eigen::VectorXd& input_scale() const noexcept { return scale_; }

 private:
  Eigen::MatrixXd standardize(const FeatureMatrix& x) const;

  DenseNetwork net_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

// Adam optimizer state over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace daepos
