#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "litege/error.hpp"
#include "litege/prng.hpp"

namespace litege {

enum class RunMode { train, eval };

// Batches are column-major: one sample per column.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Eigen::MatrixXd forward(const Eigen::MatrixXd& x, RunMode mode) = 0;
  // Consumes the cache of the preceding forward; accumulates parameter
  // gradients and returns gradients w.r.t. the layer input.
  virtual Eigen::MatrixXd backward(const Eigen::MatrixXd& dy) = 0;

  virtual Eigen::Index in_dim() const = 0;
  virtual Eigen::Index out_dim() const = 0;

  virtual Eigen::Index param_count() const { return 0; }
  virtual void copy_params(double* dst) const { (void)dst; }
  virtual void load_params(const double* src) { (void)src; }
  virtual void copy_grads(double* dst) const { (void)dst; }
  virtual void zero_grads() {}

  // Non-trainable state (batch-norm running statistics).
  virtual Eigen::Index buffer_count() const { return 0; }
  virtual void copy_buffers(double* dst) const { (void)dst; }
  virtual void load_buffers(const double* src) { (void)src; }
};

class DenseLayer final : public Layer {
 public:
  // He-style uniform init with fan-in scaling, zero biases.
  DenseLayer(Eigen::Index in, Eigen::Index out, Rng& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, RunMode mode) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy) override;

  Eigen::Index in_dim() const override { return weights_.cols(); }
  Eigen::Index out_dim() const override { return weights_.rows(); }
  Eigen::Index param_count() const override {
    return weights_.size() + biases_.size();
  }
  void copy_params(double* dst) const override;
  void load_params(const double* src) override;
  void copy_grads(double* dst) const override;
  void zero_grads() override;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& biases() const { return biases_; }
  Eigen::MatrixXd& mutable_weights() { return weights_; }
  Eigen::VectorXd& mutable_biases() { return biases_; }

 private:
  Eigen::MatrixXd weights_;  // out x in
  Eigen::VectorXd biases_;
  Eigen::MatrixXd grad_w_;
  Eigen::VectorXd grad_b_;
  Eigen::MatrixXd input_;  // cache
};

class ReluLayer final : public Layer {
 public:
  explicit ReluLayer(Eigen::Index dim) : dim_(dim) {}
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, RunMode mode) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy) override;
  Eigen::Index in_dim() const override { return dim_; }
  Eigen::Index out_dim() const override { return dim_; }

 private:
  Eigen::Index dim_;
  Eigen::MatrixXd input_;
};

class BatchNormLayer final : public Layer {
 public:
  explicit BatchNormLayer(Eigen::Index dim, double momentum = 0.1,
                          double eps = 1e-5);

  // Train mode needs batch size >= 2 and updates running statistics; eval
  // mode is a deterministic affine map and requires statistics to exist.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, RunMode mode) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy) override;

  Eigen::Index in_dim() const override { return gamma_.size(); }
  Eigen::Index out_dim() const override { return gamma_.size(); }
  Eigen::Index param_count() const override { return 2 * gamma_.size(); }
  void copy_params(double* dst) const override;
  void load_params(const double* src) override;
  void copy_grads(double* dst) const override;
  void zero_grads() override;

  Eigen::Index buffer_count() const override { return 2 * gamma_.size() + 1; }
  void copy_buffers(double* dst) const override;
  void load_buffers(const double* src) override;

  bool has_stats() const { return has_stats_; }
  const Eigen::VectorXd& running_mean() const { return running_mean_; }
  const Eigen::VectorXd& running_var() const { return running_var_; }

 private:
  Eigen::VectorXd gamma_, beta_;
  Eigen::VectorXd running_mean_, running_var_;
  double momentum_, eps_;
  bool has_stats_ = false;

  Eigen::VectorXd grad_gamma_, grad_beta_;
  // Caches for backward.
  RunMode mode_ = RunMode::train;
  Eigen::MatrixXd xhat_;
  Eigen::MatrixXd centered_;
  Eigen::VectorXd inv_std_;
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  void add(std::unique_ptr<Layer> layer);
  void add_dense(Eigen::Index in, Eigen::Index out, Rng& rng);
  // Dense -> BatchNorm -> ReLU.
  void add_block(Eigen::Index in, Eigen::Index out, Rng& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, RunMode mode);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy);

  Eigen::Index in_dim() const;
  Eigen::Index out_dim() const;
  Eigen::Index param_count() const;
  void copy_params(double* dst) const;
  void load_params(const double* src);
  void copy_grads(double* dst) const;
  void zero_grads();
  Eigen::Index buffer_count() const;
  void copy_buffers(double* dst) const;
  void load_buffers(const double* src);

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

class Adam {
 public:
  explicit Adam(Eigen::Index n, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr);
  std::uint64_t steps() const { return t_; }

 private:
  Eigen::VectorXd m_, v_;
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

// lr_end + 0.5 (lr_start - lr_end) (1 + cos(pi step / total)).
double cosine_lr(std::size_t step, std::size_t total_steps, double lr_start,
                 double lr_end);

}  // namespace litege
