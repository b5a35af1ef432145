#pragma once

#include <vector>

#include "facecycle/config.hpp"
#include "facecycle/losses.hpp"
#include "facecycle/netspec.hpp"
#include "facecycle/optim.hpp"
#include "facecycle/rng.hpp"

namespace facecycle::training {

struct TrainState {
  netspec::Generator g, f;  // g: X->Y, f: Y->X
  std::vector<netspec::Discriminator> d_y, d_x;
  optim::Optimizer opt_g, opt_f;
  std::vector<optim::Optimizer> opt_dy, opt_dx;
  long long step = 0;
  Rng data_rng{1};
  uint64_t cfg_hash = 0;

  std::vector<nn::ParamView> named_params();       // network parameters only
  std::vector<nn::ParamView> named_params_of(const std::string& net);
};

/// Per-term switches for instrumented steps; production training runs with
/// everything enabled.
struct TermMask {
  bool adv_g = true, adv_f = true, cyc_g = true, cyc_f = true;
  bool update_discriminators = true;
};

TrainState init_state(const config::TrainConfig& cfg);

/// One training step: every discriminator is updated on its own least-squares
/// loss against severed fakes, then both generators are updated jointly on
/// the weighted objective with per-generator cycle gradient stops.
losses::LossReport train_step(TrainState& state, const Tensor4& x, const Tensor4& y,
                              const config::TrainConfig& cfg, const TermMask& mask = {});

/// Full pipeline: loads both frame stores, runs total_steps steps (resuming
/// from `resume_from` when given), appends one LossReport line per step to
/// <output_dir>/train.log and checkpoints every checkpoint_interval steps.
TrainState train_loop(const config::TrainConfig& cfg, const std::string& resume_from = "");

}  // namespace facecycle::training
