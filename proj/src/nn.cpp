#include "litege/nn.hpp"

#include <cmath>

namespace litege {

DenseLayer::DenseLayer(Eigen::Index in, Eigen::Index out, Rng& rng) {
  if (in < 1 || out < 1) fail_invalid("dense layer: dimensions must be positive");
  weights_.resize(out, in);
  double limit = std::sqrt(6.0 / static_cast<double>(in));
  for (Eigen::Index j = 0; j < in; ++j)
    for (Eigen::Index i = 0; i < out; ++i) weights_(i, j) = rng.uniform(-limit, limit);
  biases_ = Eigen::VectorXd::Zero(out);
  grad_w_ = Eigen::MatrixXd::Zero(out, in);
  grad_b_ = Eigen::VectorXd::Zero(out);
}

Eigen::MatrixXd DenseLayer::forward(const Eigen::MatrixXd& x, RunMode) {
  if (x.rows() != weights_.cols())
    fail_invalid("dense layer: input has " + std::to_string(x.rows()) +
                 " rows, expected " + std::to_string(weights_.cols()));
  input_ = x;
  return (weights_ * x).colwise() + biases_;
}

Eigen::MatrixXd DenseLayer::backward(const Eigen::MatrixXd& dy) {
  if (dy.rows() != weights_.rows() || dy.cols() != input_.cols())
    fail_invalid("dense layer: upstream gradient shape mismatch");
  grad_w_.noalias() += dy * input_.transpose();
  grad_b_ += dy.rowwise().sum();
  return weights_.transpose() * dy;
}

void DenseLayer::copy_params(double* dst) const {
  Eigen::Map<Eigen::MatrixXd>(dst, weights_.rows(), weights_.cols()) = weights_;
  Eigen::Map<Eigen::VectorXd>(dst + weights_.size(), biases_.size()) = biases_;
}

void DenseLayer::load_params(const double* src) {
  weights_ = Eigen::Map<const Eigen::MatrixXd>(src, weights_.rows(), weights_.cols());
  biases_ = Eigen::Map<const Eigen::VectorXd>(src + weights_.size(), biases_.size());
}

void DenseLayer::copy_grads(double* dst) const {
  Eigen::Map<Eigen::MatrixXd>(dst, grad_w_.rows(), grad_w_.cols()) = grad_w_;
  Eigen::Map<Eigen::VectorXd>(dst + grad_w_.size(), grad_b_.size()) = grad_b_;
}

void DenseLayer::zero_grads() {
  grad_w_.setZero();
  grad_b_.setZero();
}

Eigen::MatrixXd ReluLayer::forward(const Eigen::MatrixXd& x, RunMode) {
  if (x.rows() != dim_) fail_invalid("relu layer: dimension mismatch");
  input_ = x;
  return x.cwiseMax(0.0);
}

Eigen::MatrixXd ReluLayer::backward(const Eigen::MatrixXd& dy) {
  return (input_.array() > 0.0).select(dy, 0.0);
}

BatchNormLayer::BatchNormLayer(Eigen::Index dim, double momentum, double eps)
    : gamma_(Eigen::VectorXd::Ones(dim)),
      beta_(Eigen::VectorXd::Zero(dim)),
      running_mean_(Eigen::VectorXd::Zero(dim)),
      running_var_(Eigen::VectorXd::Ones(dim)),
      momentum_(momentum),
      eps_(eps),
      grad_gamma_(Eigen::VectorXd::Zero(dim)),
      grad_beta_(Eigen::VectorXd::Zero(dim)) {
  if (dim < 1) fail_invalid("batch norm: dimension must be positive");
}

Eigen::MatrixXd BatchNormLayer::forward(const Eigen::MatrixXd& x, RunMode mode) {
  if (x.rows() != gamma_.size()) fail_invalid("batch norm: dimension mismatch");
  mode_ = mode;
  if (mode == RunMode::train) {
    const auto b = static_cast<double>(x.cols());
    if (x.cols() < 2) fail_invalid("batch norm: train mode needs batch size >= 2");
    Eigen::VectorXd mean = x.rowwise().mean();
    centered_ = x.colwise() - mean;
    Eigen::VectorXd var = centered_.array().square().rowwise().mean();
    inv_std_ = (var.array() + eps_).rsqrt();
    xhat_ = centered_.array().colwise() * inv_std_.array();

    running_mean_ = (1.0 - momentum_) * running_mean_ + momentum_ * mean;
    running_var_ =
        (1.0 - momentum_) * running_var_ + momentum_ * (var * b / (b - 1.0));
    has_stats_ = true;
  } else {
    if (!has_stats_)
      fail_invalid("batch norm: eval mode before any statistics exist");
    inv_std_ = (running_var_.array() + eps_).rsqrt();
    centered_ = x.colwise() - running_mean_;
    xhat_ = centered_.array().colwise() * inv_std_.array();
  }
  return (xhat_.array().colwise() * gamma_.array()).colwise() + beta_.array();
}

Eigen::MatrixXd BatchNormLayer::backward(const Eigen::MatrixXd& dy) {
  if (dy.rows() != gamma_.size() || dy.cols() != xhat_.cols())
    fail_invalid("batch norm: upstream gradient shape mismatch");
  grad_gamma_ += (dy.array() * xhat_.array()).rowwise().sum().matrix();
  grad_beta_ += dy.rowwise().sum();

  Eigen::MatrixXd dxhat = dy.array().colwise() * gamma_.array();
  if (mode_ == RunMode::eval) {
    // Affine map: dx = dxhat * inv_std.
    return dxhat.array().colwise() * inv_std_.array();
  }
  const auto b = static_cast<double>(dy.cols());
  // dvar and dmean terms of the standard batch-norm backward pass.
  Eigen::VectorXd dvar =
      ((dxhat.array() * centered_.array()).rowwise().sum().matrix().array() *
       (-0.5) * inv_std_.array().cube())
          .matrix();
  Eigen::VectorXd dmean =
      (dxhat.array().colwise() * (-inv_std_.array())).rowwise().sum().matrix() +
      (dvar.array() * (-2.0 / b) * centered_.rowwise().sum().array()).matrix();
  Eigen::MatrixXd dx = dxhat.array().colwise() * inv_std_.array();
  dx += (centered_.array().colwise() * (dvar.array() * 2.0 / b)).matrix();
  dx.colwise() += (dmean / b).eval();
  return dx;
}

void BatchNormLayer::copy_params(double* dst) const {
  Eigen::Map<Eigen::VectorXd>(dst, gamma_.size()) = gamma_;
  Eigen::Map<Eigen::VectorXd>(dst + gamma_.size(), beta_.size()) = beta_;
}

void BatchNormLayer::load_params(const double* src) {
  gamma_ = Eigen::Map<const Eigen::VectorXd>(src, gamma_.size());
  beta_ = Eigen::Map<const Eigen::VectorXd>(src + gamma_.size(), beta_.size());
}

void BatchNormLayer::copy_grads(double* dst) const {
  Eigen::Map<Eigen::VectorXd>(dst, grad_gamma_.size()) = grad_gamma_;
  Eigen::Map<Eigen::VectorXd>(dst + grad_gamma_.size(), grad_beta_.size()) = grad_beta_;
}

void BatchNormLayer::zero_grads() {
  grad_gamma_.setZero();
  grad_beta_.setZero();
}

void BatchNormLayer::copy_buffers(double* dst) const {
  Eigen::Map<Eigen::VectorXd>(dst, running_mean_.size()) = running_mean_;
  Eigen::Map<Eigen::VectorXd>(dst + running_mean_.size(), running_var_.size()) =
      running_var_;
  dst[2 * running_mean_.size()] = has_stats_ ? 1.0 : 0.0;
}

void BatchNormLayer::load_buffers(const double* src) {
  running_mean_ = Eigen::Map<const Eigen::VectorXd>(src, running_mean_.size());
  running_var_ =
      Eigen::Map<const Eigen::VectorXd>(src + running_mean_.size(), running_var_.size());
  if ((running_var_.array() < 0).any())
    fail_invalid("batch norm: negative running variance");
  has_stats_ = src[2 * running_mean_.size()] != 0.0;
}

void Sequential::add(std::unique_ptr<Layer> layer) {
  if (!layers_.empty() && layers_.back()->out_dim() != layer->in_dim())
    fail_invalid("sequential: layer dimension mismatch");
  layers_.push_back(std::move(layer));
}

void Sequential::add_dense(Eigen::Index in, Eigen::Index out, Rng& rng) {
  add(std::make_unique<DenseLayer>(in, out, rng));
}

void Sequential::add_block(Eigen::Index in, Eigen::Index out, Rng& rng) {
  add(std::make_unique<DenseLayer>(in, out, rng));
  add(std::make_unique<BatchNormLayer>(out));
  add(std::make_unique<ReluLayer>(out));
}

Eigen::MatrixXd Sequential::forward(const Eigen::MatrixXd& x, RunMode mode) {
  Eigen::MatrixXd y = x;
  for (auto& layer : layers_) y = layer->forward(y, mode);
  return y;
}

Eigen::MatrixXd Sequential::backward(const Eigen::MatrixXd& dy) {
  Eigen::MatrixXd d = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
  return d;
}

Eigen::Index Sequential::in_dim() const {
  if (layers_.empty()) fail_invalid("sequential: empty");
  return layers_.front()->in_dim();
}

Eigen::Index Sequential::out_dim() const {
  if (layers_.empty()) fail_invalid("sequential: empty");
  return layers_.back()->out_dim();
}

Eigen::Index Sequential::param_count() const {
  Eigen::Index n = 0;
  for (const auto& layer : layers_) n += layer->param_count();
  return n;
}

void Sequential::copy_params(double* dst) const {
  for (const auto& layer : layers_) {
    layer->copy_params(dst);
    dst += layer->param_count();
  }
}

void Sequential::load_params(const double* src) {
  for (auto& layer : layers_) {
    layer->load_params(src);
    src += layer->param_count();
  }
}

void Sequential::copy_grads(double* dst) const {
  for (const auto& layer : layers_) {
    layer->copy_grads(dst);
    dst += layer->param_count();
  }
}

void Sequential::zero_grads() {
  for (auto& layer : layers_) layer->zero_grads();
}

Eigen::Index Sequential::buffer_count() const {
  Eigen::Index n = 0;
  for (const auto& layer : layers_) n += layer->buffer_count();
  return n;
}

void Sequential::copy_buffers(double* dst) const {
  for (const auto& layer : layers_) {
    layer->copy_buffers(dst);
    dst += layer->buffer_count();
  }
}

void Sequential::load_buffers(const double* src) {
  for (auto& layer : layers_) {
    layer->load_buffers(src);
    src += layer->buffer_count();
  }
}

Adam::Adam(Eigen::Index n, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(n)),
      v_(Eigen::VectorXd::Zero(n)),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    fail_invalid("adam: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grads;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grads.array().square().matrix();
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr_start,
                 double lr_end) {
  if (total_steps == 0 || step > total_steps)
    fail_invalid("cosine_lr: need 0 <= step <= total_steps, total > 0");
  double phase = M_PI * static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + std::cos(phase));
}

}  // namespace litege
