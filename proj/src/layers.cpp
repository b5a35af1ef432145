#include "facecycle/layers.hpp"

namespace facecycle::nn {

namespace k = facecycle::kernels;

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride, int pad, Rng& rng, float init_std)
    : in_c_(in_c),
      out_c_(out_c),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      w_(out_c, in_c, kernel, kernel),
      w_grad_(out_c, in_c, kernel, kernel),
      b_(out_c, 0.0f),
      b_grad_(out_c, 0.0f) {
  if (kernel < 1 || stride < 1 || pad < 0) throw std::invalid_argument("bad conv geometry");
  for (auto& v : w_.vec()) v = rng.normal(0.0f, init_std);
}

Tensor4 Conv2d::forward(const Tensor4& x, Cache& c) const {
  if (x.c() != in_c_) throw std::invalid_argument("conv: channel mismatch");
  c.x = x;
  Tensor4 y;
  k::conv2d_forward(x, w_, b_, stride_, pad_, y);
  return y;
}

Tensor4 Conv2d::backward(const Tensor4& dy, const Cache& c, bool acc_params) {
  if (acc_params) k::conv2d_backward_params(dy, c.x, stride_, pad_, w_grad_, b_grad_);
  Tensor4 dx(c.x.shape());
  k::conv2d_backward_input(dy, w_, stride_, pad_, dx);
  return dx;
}

void Conv2d::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
  out.push_back({prefix + ".w", &w_.vec(), &w_grad_.vec()});
  out.push_back({prefix + ".b", &b_, &b_grad_});
}

InstanceNorm::InstanceNorm(int channels, float eps)
    : channels_(channels),
      eps_(eps),
      gamma_(channels, 1.0f),
      beta_(channels, 0.0f),
      gamma_grad_(channels, 0.0f),
      beta_grad_(channels, 0.0f) {}

Tensor4 InstanceNorm::forward(const Tensor4& x, Cache& c) const {
  if (x.c() != channels_) throw std::invalid_argument("instance_norm: channel mismatch");
  Tensor4 y;
  k::instance_norm_forward(x, gamma_, beta_, eps_, y, c.aux, c.stats);
  return y;
}

Tensor4 InstanceNorm::backward(const Tensor4& dy, const Cache& c, bool acc_params) {
  Tensor4 dx;
  if (acc_params) {
    k::instance_norm_backward(dy, c.aux, c.stats, gamma_, dx, gamma_grad_, beta_grad_);
  } else {
    std::vector<float> dg(channels_, 0.0f), db(channels_, 0.0f);
    k::instance_norm_backward(dy, c.aux, c.stats, gamma_, dx, dg, db);
  }
  return dx;
}

void InstanceNorm::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
  out.push_back({prefix + ".gamma", &gamma_, &gamma_grad_});
  out.push_back({prefix + ".beta", &beta_, &beta_grad_});
}

Tensor4 LeakyReLU::forward(const Tensor4& x, Cache& c) const {
  c.x = x;
  Tensor4 y;
  k::leaky_relu_forward(x, slope_, y);
  return y;
}

Tensor4 LeakyReLU::backward(const Tensor4& dy, const Cache& c, bool) {
  Tensor4 dx;
  k::leaky_relu_backward(dy, c.x, slope_, dx);
  return dx;
}

Tensor4 ReLU::forward(const Tensor4& x, Cache& c) const {
  c.x = x;
  Tensor4 y;
  k::leaky_relu_forward(x, 0.0f, y);
  return y;
}

Tensor4 ReLU::backward(const Tensor4& dy, const Cache& c, bool) {
  Tensor4 dx;
  k::leaky_relu_backward(dy, c.x, 0.0f, dx);
  return dx;
}

Tensor4 Tanh::forward(const Tensor4& x, Cache& c) const {
  Tensor4 y;
  k::tanh_forward(x, y);
  c.aux = y;
  return y;
}

Tensor4 Tanh::backward(const Tensor4& dy, const Cache& c, bool) {
  Tensor4 dx;
  k::tanh_backward(dy, c.aux, dx);
  return dx;
}

Tensor4 Upsample2x::forward(const Tensor4& x, Cache&) const {
  Tensor4 y;
  k::upsample2x_forward(x, y);
  return y;
}

Tensor4 Upsample2x::backward(const Tensor4& dy, const Cache&, bool) {
  Tensor4 dx;
  k::upsample2x_backward(dy, dx);
  return dx;
}

Tensor4 Sequential::forward(const Tensor4& x, Tape& tape) const {
  tape.assign(layers_.size(), Cache{});
  Tensor4 cur = x;
  for (size_t i = 0; i < layers_.size(); ++i) cur = layers_[i]->forward(cur, tape[i]);
  return cur;
}

Tensor4 Sequential::forward(const Tensor4& x) const {
  Tape tape;
  return forward(x, tape);
}

Tensor4 Sequential::backward(const Tensor4& dy, const Tape& tape, bool acc_params) {
  if (tape.size() != layers_.size()) throw std::logic_error("backward: stale tape");
  Tensor4 cur = dy;
  for (size_t i = layers_.size(); i-- > 0;) cur = layers_[i]->backward(cur, tape[i], acc_params);
  return cur;
}

std::vector<ParamView> Sequential::params(const std::string& prefix) {
  std::vector<ParamView> out;
  for (size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_params(prefix + ".l" + std::to_string(i), out);
  return out;
}

void Sequential::zero_grads() {
  for (auto& p : params(""))
    std::fill(p.grad->begin(), p.grad->end(), 0.0f);
}

size_t Sequential::param_count() {
  size_t n = 0;
  for (auto& p : params("")) n += p.value->size();
  return n;
}

Tensor4 ResidualBlock::forward(const Tensor4& x, Cache& c) const {
  c.sub.clear();
  Tensor4 body_out = body_.forward(x, c.sub);
  Tensor4 y;
  kernels::add(x, body_out, y);
  return y;
}

Tensor4 ResidualBlock::backward(const Tensor4& dy, const Cache& c, bool acc_params) {
  Tensor4 dbody = body_.backward(dy, c.sub, acc_params);
  Tensor4 dx;
  kernels::add(dy, dbody, dx);
  return dx;
}

void ResidualBlock::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
  auto sub = body_.params(prefix);
  out.insert(out.end(), sub.begin(), sub.end());
}

}  // namespace facecycle::nn
