#pragma once

#include <string>
#include <vector>

#include "facecycle/layers.hpp"

namespace facecycle::optim {

struct OptimizerConfig {
  std::string kind = "adam";  // "adam" | "sgd"
  double learning_rate = 2e-4;
  double beta1 = 0.5;  // momentum for sgd
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool linear_lr_decay = false;

  void validate() const;
};

/// Per-network optimizer; moment buffers follow the network's parameter
/// ordering, which is deterministic by construction.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(const OptimizerConfig& cfg, const std::vector<nn::ParamView>& params);

  /// Applies one update from the accumulated gradients. lr_scale multiplies
  /// the base learning rate (used for linear decay).
  void step(const std::vector<nn::ParamView>& params, double lr_scale = 1.0);

  long long steps_taken() const { return t_; }
  void set_steps_taken(long long t) { t_ = t; }
  std::vector<std::vector<float>>& first_moments() { return m_; }
  std::vector<std::vector<float>>& second_moments() { return v_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::vector<std::vector<float>> m_, v_;  // v_ unused for sgd
  long long t_ = 0;
};

}  // namespace facecycle::optim
