#include "daepos/models/network.hpp"

#include <algorithm>
#include <numeric>

#include "daepos/error.hpp"

namespace daepos {

namespace {
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
}  // namespace

DenseNetwork::DenseNetwork(std::size_t input_width, std::vector<std::size_t> layers)
    : input_width_(input_width), layers_(std::move(layers)) {
  if (input_width_ == 0) throw ContractError("network input width must be positive");
  if (layers_.empty()) throw ContractError("network needs at least one hidden layer");
  std::size_t offset = 0;
  std::size_t in = input_width_;
  for (const auto out : layers_) {
    if (out == 0) throw ContractError("network layer widths must be positive");
    LayerOffsets o{in, out, offset, 0, 0, 0};
    offset += in * out;
    o.b = offset;
    offset += out;
    o.gamma = offset;
    offset += out;
    o.beta = offset;
    offset += out;
    offsets_.push_back(o);
    running_mean_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out)));
    running_var_.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(out)));
    in = out;
  }
  output_w_ = offset;
  offset += in;
  output_b_ = offset;
  offset += 1;
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

void DenseNetwork::initialize(std::mt19937_64& rng) {
  auto fill_uniform = [&](std::size_t start, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) params_[static_cast<Eigen::Index>(start + i)] = u(rng);
  };
  for (const auto& o : offsets_) {
    fill_uniform(o.w, o.in * o.out, o.in);
    fill_uniform(o.b, o.out, o.in);
    VecMap(params_.data() + o.gamma, static_cast<Eigen::Index>(o.out)).setOnes();
    VecMap(params_.data() + o.beta, static_cast<Eigen::Index>(o.out)).setZero();
  }
  fill_uniform(output_w_, layers_.back(), layers_.back());
  fill_uniform(output_b_, 1, layers_.back());
  for (auto& m : running_mean_) m.setZero();
  for (auto& v : running_var_) v.setOnes();
}

double DenseNetwork::train_loss(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                Eigen::VectorXd* gradient, BatchStats* stats) const {
  const auto batch = inputs.cols();
  if (batch == 0 || batch != targets.size()) throw ContractError("network: batch and target sizes differ");
  if (static_cast<std::size_t>(inputs.rows()) != input_width_) throw ContractError("network: input width mismatch");
  const double bsz = static_cast<double>(batch);

  const auto n_layers = offsets_.size();
  std::vector<Eigen::MatrixXd> act(n_layers + 1);
  std::vector<Eigen::MatrixXd> xhat(n_layers);
  std::vector<Eigen::MatrixXd> pre(n_layers);
  std::vector<Eigen::VectorXd> inv_std(n_layers);
  act[0] = inputs;
  if (stats) {
    stats->mean.assign(n_layers, {});
    stats->variance.assign(n_layers, {});
  }

  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& o = offsets_[l];
    const auto out = static_cast<Eigen::Index>(o.out);
    ConstMatMap w(params_.data() + o.w, out, static_cast<Eigen::Index>(o.in));
    ConstVecMap b(params_.data() + o.b, out);
    ConstVecMap gamma(params_.data() + o.gamma, out);
    ConstVecMap beta(params_.data() + o.beta, out);

    Eigen::MatrixXd z = w * act[l];
    z.colwise() += b;
    const Eigen::VectorXd mu = z.rowwise().mean();
    z.colwise() -= mu;
    const Eigen::VectorXd var = z.array().square().rowwise().mean();
    inv_std[l] = (var.array() + kBatchNormEps).rsqrt();
    xhat[l] = z.array().colwise() * inv_std[l].array();
    pre[l] = (xhat[l].array().colwise() * gamma.array()).colwise() + beta.array();
    act[l + 1] = pre[l].cwiseMax(0.0);
    if (stats) {
      stats->mean[l] = mu;
      stats->variance[l] = var;
    }
  }

  const auto last = static_cast<Eigen::Index>(layers_.back());
  ConstVecMap out_w(params_.data() + output_w_, last);
  const double out_b = params_[static_cast<Eigen::Index>(output_b_)];
  const Eigen::VectorXd prediction = (act[n_layers].transpose() * out_w).array() + out_b;
  const Eigen::VectorXd residual = prediction - targets;
  const double loss = residual.squaredNorm() / bsz;
  if (!gradient) return loss;

  gradient->setZero(params_.size());
  const Eigen::VectorXd d_out = 2.0 * residual / bsz;
  VecMap(gradient->data() + output_w_, last) = act[n_layers] * d_out;
  (*gradient)[static_cast<Eigen::Index>(output_b_)] = d_out.sum();
  Eigen::MatrixXd d_act = out_w * d_out.transpose();

  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& o = offsets_[l];
    const auto out = static_cast<Eigen::Index>(o.out);
    const auto in = static_cast<Eigen::Index>(o.in);
    ConstMatMap w(params_.data() + o.w, out, in);
    ConstVecMap gamma(params_.data() + o.gamma, out);

    const Eigen::MatrixXd d_pre = (pre[l].array() > 0.0).select(d_act, 0.0);
    VecMap(gradient->data() + o.gamma, out) = (d_pre.array() * xhat[l].array()).rowwise().sum();
    VecMap(gradient->data() + o.beta, out) = d_pre.rowwise().sum();

    const Eigen::ArrayXXd d_xhat = d_pre.array().colwise() * gamma.array();
    const Eigen::ArrayXd sum_d = d_xhat.rowwise().sum();
    const Eigen::ArrayXd sum_dx = (d_xhat * xhat[l].array()).rowwise().sum();
    Eigen::ArrayXXd d_z = bsz * d_xhat;
    d_z.colwise() -= sum_d;
    d_z -= xhat[l].array().colwise() * sum_dx;
    d_z.colwise() *= inv_std[l].array() / bsz;

    MatMap(gradient->data() + o.w, out, in) = d_z.matrix() * act[l].transpose();
    VecMap(gradient->data() + o.b, out) = d_z.rowwise().sum().matrix();
    if (l > 0) d_act = w.transpose() * d_z.matrix();
  }
  return loss;
}

void DenseNetwork::update_running_stats(const BatchStats& stats, std::size_t batch_size) {
  const double m = kBatchNormMomentum;
  const double correction =
      batch_size > 1 ? static_cast<double>(batch_size) / static_cast<double>(batch_size - 1) : 1.0;
  for (std::size_t l = 0; l < offsets_.size(); ++l) {
    running_mean_[l] = (1.0 - m) * running_mean_[l] + m * stats.mean[l];
    running_var_[l] = (1.0 - m) * running_var_[l] + m * correction * stats.variance[l];
  }
}

Eigen::VectorXd DenseNetwork::predict(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != input_width_) throw ContractError("network: input width mismatch");
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < offsets_.size(); ++l) {
    const auto& o = offsets_[l];
    const auto out = static_cast<Eigen::Index>(o.out);
    ConstMatMap w(params_.data() + o.w, out, static_cast<Eigen::Index>(o.in));
    ConstVecMap b(params_.data() + o.b, out);
    ConstVecMap gamma(params_.data() + o.gamma, out);
    ConstVecMap beta(params_.data() + o.beta, out);
    Eigen::MatrixXd z = w * a;
    z.colwise() += b - running_mean_[l];
    const Eigen::ArrayXd scale = gamma.array() * (running_var_[l].array() + kBatchNormEps).rsqrt();
    a = ((z.array().colwise() * scale).colwise() + beta.array()).cwiseMax(0.0).matrix();
  }
  ConstVecMap out_w(params_.data() + output_w_, static_cast<Eigen::Index>(layers_.back()));
  return (a.transpose() * out_w).array() + params_[static_cast<Eigen::Index>(output_b_)];
}

Adam::Adam(std::size_t n, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
  v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

NetworkRegressor NetworkRegressor::fit(const FeatureMatrix& x, const Eigen::VectorXd& y, const NetworkParams& params) {
  if (x.rows() == 0) throw DataError("network regression on an empty dataset");
  if (x.rows() != y.size()) throw ContractError("network regression: row and label counts differ");
  if (params.batch_size < 1 || params.epochs < 1 || !(params.learning_rate > 0))
    throw ContractError("network regression: batch size, epochs and learning rate must be positive");

  const auto n = static_cast<std::size_t>(x.rows());
  Eigen::VectorXd mean = x.colwise().mean().transpose();
  Eigen::VectorXd scale = ((x.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (auto& s : scale)
    if (!(s > 1e-12)) s = 1.0;

  NetworkRegressor model(DenseNetwork(static_cast<std::size_t>(x.cols()), params.layers), std::move(mean),
                         std::move(scale));
  const Eigen::MatrixXd inputs = model.standardize(x);

  std::mt19937_64 rng(params.seed);
  model.net_.initialize(rng);
  Adam adam(static_cast<std::size_t>(model.net_.parameters().size()), params.learning_rate);

  // Batch boundaries; a trailing singleton batch is merged into its predecessor
  // since batch statistics are degenerate for one sample.
  std::vector<std::size_t> bounds;
  for (std::size_t s = 0; s < n; s += params.batch_size) bounds.push_back(s);
  if (bounds.size() > 1 && n - bounds.back() == 1) bounds.pop_back();
  bounds.push_back(n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::VectorXd gradient;
  DenseNetwork::BatchStats stats;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const auto size = bounds[b + 1] - bounds[b];
      Eigen::MatrixXd xb(inputs.rows(), static_cast<Eigen::Index>(size));
      Eigen::VectorXd yb(static_cast<Eigen::Index>(size));
      for (std::size_t j = 0; j < size; ++j) {
        const auto r = static_cast<Eigen::Index>(order[bounds[b] + j]);
        xb.col(static_cast<Eigen::Index>(j)) = inputs.col(r);
        yb[static_cast<Eigen::Index>(j)] = y[r];
      }
      model.net_.train_loss(xb, yb, &gradient, &stats);
      adam.step(model.net_.parameters(), gradient);
      model.net_.update_running_stats(stats, size);
    }
  }
  return model;
}

Eigen::MatrixXd NetworkRegressor::standardize(const FeatureMatrix& x) const {
  return ((x.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array()).matrix().transpose();
}

double NetworkRegressor::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean_.size()) throw ContractError("network regression: input width mismatch");
  const Eigen::MatrixXd input = (x - mean_).cwiseQuotient(scale_);
  return net_.predict(input)[0];
}

Eigen::VectorXd NetworkRegressor::predict_batch(const FeatureMatrix& x) const {
  if (x.cols() != mean_.size()) throw ContractError("network regression: input width mismatch");
  return net_.predict(standardize(x));
}

}  // namespace daepos
