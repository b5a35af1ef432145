#include "facecycle/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace facecycle::optim {

void OptimizerConfig::validate() const {
  if (kind != "adam" && kind != "sgd")
    throw std::invalid_argument("optimizer.kind must be 'adam' or 'sgd'");
  if (learning_rate <= 0.0) throw std::invalid_argument("optimizer.learning_rate must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0) throw std::invalid_argument("optimizer.beta1 must lie in [0, 1)");
  if (beta2 < 0.0 || beta2 >= 1.0) throw std::invalid_argument("optimizer.beta2 must lie in [0, 1)");
  if (epsilon <= 0.0) throw std::invalid_argument("optimizer.epsilon must be > 0");
}

Optimizer::Optimizer(const OptimizerConfig& cfg, const std::vector<nn::ParamView>& params)
    : cfg_(cfg) {
  cfg_.validate();
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.value->size(), 0.0f);
    v_.emplace_back(p.value->size(), 0.0f);
  }
}

void Optimizer::step(const std::vector<nn::ParamView>& params, double lr_scale) {
  if (params.size() != m_.size()) throw std::logic_error("optimizer/parameter mismatch");
  ++t_;
  const float lr = static_cast<float>(cfg_.learning_rate * lr_scale);
  if (cfg_.kind == "sgd") {
    const float mom = static_cast<float>(cfg_.beta1);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& value = *params[i].value;
      const auto& grad = *params[i].grad;
      auto& m = m_[i];
      for (size_t j = 0; j < value.size(); ++j) {
        m[j] = mom * m[j] + grad[j];
        value[j] -= lr * m[j];
      }
    }
    return;
  }
  const float b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
  const float eps = static_cast<float>(cfg_.epsilon);
  const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& value = *params[i].value;
    const auto& grad = *params[i].grad;
    auto& m = m_[i];
    auto& v = v_[i];
    if (value.size() != m.size()) throw std::logic_error("optimizer/parameter size mismatch");
    for (size_t j = 0; j < value.size(); ++j) {
      const float g = grad[j];
      m[j] = b1 * m[j] + (1.0f - b1) * g;
      v[j] = b2 * v[j] + (1.0f - b2) * g * g;
      const float mhat = m[j] / bc1;
      const float vhat = v[j] / bc2;
      value[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace facecycle::optim
