#pragma once

#include <memory>
#include <string>
#include <vector>

#include "facecycle/kernels.hpp"
#include "facecycle/rng.hpp"
#include "facecycle/tensor.hpp"

namespace facecycle::nn {

/// Named view into one parameter array and its gradient buffer.
struct ParamView {
  std::string name;
  std::vector<float>* value;
  std::vector<float>* grad;
};

/// Per-layer forward state needed by the matching backward pass.
struct Cache {
  Tensor4 x;                 // layer input, when the backward needs it
  Tensor4 aux;               // xhat (norm) or output (tanh)
  std::vector<float> stats;  // inv_std per (n, c)
  std::vector<Cache> sub;    // caches of nested layers
};

using Tape = std::vector<Cache>;

class Layer {
 public:
  virtual ~Layer() = default;
  virtual const char* kind() const = 0;
  virtual Tensor4 forward(const Tensor4& x, Cache& c) const = 0;
  /// Returns dL/dx. Parameter gradients are accumulated only when acc_params
  /// is set; with it cleared the layer's parameters act as constants.
  virtual Tensor4 backward(const Tensor4& dy, const Cache& c, bool acc_params) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<ParamView>& out) {}
};

class Conv2d : public Layer {
 public:
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad, Rng& rng, float init_std = 0.02f);

  const char* kind() const override { return "conv"; }
  Tensor4 forward(const Tensor4& x, Cache& c) const override;
  Tensor4 backward(const Tensor4& dy, const Cache& c, bool acc_params) override;
  void collect_params(const std::string& prefix, std::vector<ParamView>& out) override;

  int in_c() const { return in_c_; }
  int out_c() const { return out_c_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  int pad() const { return pad_; }
  Tensor4& weights() { return w_; }
  const Tensor4& weights() const { return w_; }
  std::vector<float>& bias() { return b_; }

 private:
  int in_c_, out_c_, kernel_, stride_, pad_;
  Tensor4 w_;       // (out_c, in_c, k, k)
  Tensor4 w_grad_;  // same shape
  std::vector<float> b_, b_grad_;
};

class InstanceNorm : public Layer {
 public:
  explicit InstanceNorm(int channels, float eps = 1e-5f);

  const char* kind() const override { return "instance_norm"; }
  Tensor4 forward(const Tensor4& x, Cache& c) const override;
  Tensor4 backward(const Tensor4& dy, const Cache& c, bool acc_params) override;
  void collect_params(const std::string& prefix, std::vector<ParamView>& out) override;

 private:
  int channels_;
  float eps_;
  std::vector<float> gamma_, beta_, gamma_grad_, beta_grad_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(float slope) : slope_(slope) {}
  const char* kind() const override { return "leaky_relu"; }
  Tensor4 forward(const Tensor4& x, Cache& c) const override;
  Tensor4 backward(const Tensor4& dy, const Cache& c, bool acc_params) override;
  float slope() const { return slope_; }

 private:
  float slope_;
};

class ReLU : public Layer {
 public:
  const char* kind() const override { return "relu"; }
  Tensor4 forward(const Tensor4& x, Cache& c) const override;
  Tensor4 backward(const Tensor4& dy, const Cache& c, bool acc_params) override;
};

class Tanh : public Layer {
 public:
  const char* kind() const override { return "tanh"; }
  Tensor4 forward(const Tensor4& x, Cache& c) const override;
  Tensor4 backward(const Tensor4& dy, const Cache& c, bool acc_params) override;
};

class Upsample2x : public Layer {
 public:
  const char* kind() const override { return "upsample2x"; }
  Tensor4 forward(const Tensor4& x, Cache& c) const override;
  Tensor4 backward(const Tensor4& dy, const Cache& c, bool acc_params) override;
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  void add(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }

  Tensor4 forward(const Tensor4& x, Tape& tape) const;
  Tensor4 forward(const Tensor4& x) const;
  Tensor4 backward(const Tensor4& dy, const Tape& tape, bool acc_params);

  std::vector<ParamView> params(const std::string& prefix);
  void zero_grads();
  size_t param_count();

  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
  std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// y = x + body(x)
class ResidualBlock : public Layer {
 public:
  explicit ResidualBlock(Sequential body) : body_(std::move(body)) {}
  const char* kind() const override { return "residual"; }
  Tensor4 forward(const Tensor4& x, Cache& c) const override;
  Tensor4 backward(const Tensor4& dy, const Cache& c, bool acc_params) override;
  void collect_params(const std::string& prefix, std::vector<ParamView>& out) override;
  Sequential& body() { return body_; }

 private:
  Sequential body_;
};

}  // namespace facecycle::nn
