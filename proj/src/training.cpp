#include "facecycle/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "facecycle/checkpoint.hpp"
#include "facecycle/imaging.hpp"
#include "facecycle/kernels.hpp"

namespace facecycle::training {

namespace {

void append_params(std::vector<nn::ParamView>& out, std::vector<nn::ParamView>&& in) {
  out.insert(out.end(), std::make_move_iterator(in.begin()), std::make_move_iterator(in.end()));
}

void check_params_finite(TrainState& state) {
  for (const auto& p : state.named_params())
    for (float v : *p.value)
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite parameter '" + p.name + "' at step " +
                                 std::to_string(state.step));
}

double decay_scale(const config::TrainConfig& cfg, long long step) {
  if (!cfg.optimizer.linear_lr_decay) return 1.0;
  double remaining = 1.0 - static_cast<double>(step) / static_cast<double>(cfg.total_steps);
  return remaining < 0.0 ? 0.0 : remaining;
}

}  // namespace

std::vector<nn::ParamView> TrainState::named_params() {
  std::vector<nn::ParamView> out;
  append_params(out, g.net.params("G"));
  append_params(out, f.net.params("F"));
  for (size_t i = 0; i < d_y.size(); ++i)
    append_params(out, d_y[i].net.params("DY" + std::to_string(i + 1)));
  for (size_t i = 0; i < d_x.size(); ++i)
    append_params(out, d_x[i].net.params("DX" + std::to_string(i + 1)));
  return out;
}

std::vector<nn::ParamView> TrainState::named_params_of(const std::string& net) {
  if (net == "G") return g.net.params("G");
  if (net == "F") return f.net.params("F");
  if (net.rfind("DY", 0) == 0) return d_y.at(std::stoul(net.substr(2)) - 1).net.params(net);
  if (net.rfind("DX", 0) == 0) return d_x.at(std::stoul(net.substr(2)) - 1).net.params(net);
  throw std::invalid_argument("unknown network " + net);
}

TrainState init_state(const config::TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  {
    Rng rng(derive_seed(cfg.seed, "G"));
    st.g = netspec::build_generator(cfg.generator, rng);
  }
  {
    Rng rng(derive_seed(cfg.seed, "F"));
    st.f = netspec::build_generator(cfg.generator, rng);
  }
  auto build_side = [&](const std::vector<std::string>& stacks, const std::string& tag,
                        std::vector<netspec::Discriminator>& out) {
    for (size_t i = 0; i < stacks.size(); ++i) {
      Rng rng(derive_seed(cfg.seed, tag + std::to_string(i + 1)));
      out.push_back(netspec::build_discriminator(cfg.disc_stack(stacks[i]), rng));
    }
  };
  build_side(cfg.discriminators_y, "DY", st.d_y);
  build_side(cfg.discriminators_x, "DX", st.d_x);

  st.opt_g = optim::Optimizer(cfg.optimizer, st.g.net.params("G"));
  st.opt_f = optim::Optimizer(cfg.optimizer, st.f.net.params("F"));
  for (size_t i = 0; i < st.d_y.size(); ++i)
    st.opt_dy.emplace_back(cfg.optimizer, st.d_y[i].net.params("DY" + std::to_string(i + 1)));
  for (size_t i = 0; i < st.d_x.size(); ++i)
    st.opt_dx.emplace_back(cfg.optimizer, st.d_x[i].net.params("DX" + std::to_string(i + 1)));

  st.data_rng = Rng(derive_seed(cfg.seed, "data"));
  st.cfg_hash = config::config_hash(cfg);
  return st;
}

losses::LossReport train_step(TrainState& state, const Tensor4& x, const Tensor4& y,
                              const config::TrainConfig& cfg, const TermMask& mask) {
  if (x.c() != 3 || y.c() != 3 || x.h() != cfg.image_size || y.h() != cfg.image_size ||
      x.w() != cfg.image_size || y.w() != cfg.image_size || x.n() != y.n())
    throw std::invalid_argument("train_step: batch shape does not match config");

  const auto& w = cfg.loss_weights;
  const auto norm = cfg.cycle_norm_enum();
  const double lr_scale = decay_scale(cfg, state.step);
  losses::LossReport report;
  report.step = state.step + 1;

  // Fakes for this step; tapes are reused by the generator update below.
  nn::Tape tape_g, tape_f;
  Tensor4 fake_y = state.g.net.forward(x, tape_g);
  Tensor4 fake_x = state.f.net.forward(y, tape_f);

  // (1) every discriminator trains on its own least-squares loss; the fakes
  // are data here, no gradient reaches the generators.
  if (mask.update_discriminators) {
    const double dy_scale = cfg.average_d_losses && state.d_y.size() == 2 ? 0.5 : 1.0;
    const double dx_scale = cfg.average_d_losses && state.d_x.size() == 2 ? 0.5 : 1.0;
    for (size_t i = 0; i < state.d_y.size(); ++i) {
      state.d_y[i].net.zero_grads();
      double v = losses::lsgan_d_grad(state.d_y[i].net, y, fake_y, w, dy_scale);
      auto params = state.d_y[i].net.params("DY" + std::to_string(i + 1));
      state.opt_dy[i].step(params, lr_scale);
      (i == 0 ? report.d_y1 : report.d_y2) = v;
    }
    for (size_t i = 0; i < state.d_x.size(); ++i) {
      state.d_x[i].net.zero_grads();
      double v = losses::lsgan_d_grad(state.d_x[i].net, x, fake_x, w, dx_scale);
      auto params = state.d_x[i].net.params("DX" + std::to_string(i + 1));
      state.opt_dx[i].step(params, lr_scale);
      (i == 0 ? report.d_x1 : report.d_x2) = v;
    }
  }

  // (2) joint generator update. Adversarial gradients pass through the (just
  // updated) discriminators without touching their parameters; each cycle
  // term backpropagates through the wrapping generator in input-only mode.
  const bool gen_update_step = (state.step + 1) % cfg.d_steps_per_g == 0;
  state.g.net.zero_grads();
  state.f.net.zero_grads();

  Tensor4 dfake_y = Tensor4::zeros_like(fake_y);
  Tensor4 dfake_x = Tensor4::zeros_like(fake_x);

  if (mask.adv_g) {
    if (state.d_y.size() == 2) {
      double v1 = losses::lsgan_g_grad(state.d_y[0].net, fake_y, w, dfake_y, w.alpha * w.gamma);
      double v2 =
          losses::lsgan_g_grad(state.d_y[1].net, fake_y, w, dfake_y, w.alpha * (1.0 - w.gamma));
      report.adv_g = w.gamma * v1 + (1.0 - w.gamma) * v2;
    } else {
      report.adv_g = losses::lsgan_g_grad(state.d_y[0].net, fake_y, w, dfake_y, w.alpha);
    }
  }
  if (mask.adv_f) {
    if (state.d_x.size() == 2) {
      double v1 = losses::lsgan_g_grad(state.d_x[0].net, fake_x, w, dfake_x, w.beta * w.gamma);
      double v2 =
          losses::lsgan_g_grad(state.d_x[1].net, fake_x, w, dfake_x, w.beta * (1.0 - w.gamma));
      report.adv_f = w.gamma * v1 + (1.0 - w.gamma) * v2;
    } else {
      report.adv_f = losses::lsgan_g_grad(state.d_x[0].net, fake_x, w, dfake_x, w.beta);
    }
  }
  if (mask.cyc_g)
    report.cyc_g = losses::cycle_recon_grad(state.f.net, fake_y, x, norm, dfake_y, w.lambda);
  if (mask.cyc_f)
    report.cyc_f = losses::cycle_recon_grad(state.g.net, fake_x, y, norm, dfake_x, w.lambda);

  if (gen_update_step) {
    state.g.net.backward(dfake_y, tape_g, /*acc_params=*/true);
    state.f.net.backward(dfake_x, tape_f, /*acc_params=*/true);
    auto gp = state.g.net.params("G");
    auto fp = state.f.net.params("F");
    state.opt_g.step(gp, lr_scale);
    state.opt_f.step(fp, lr_scale);
  }

  losses::full_objective(report, w);
  state.step += 1;
  check_params_finite(state);
  return report;
}

TrainState train_loop(const config::TrainConfig& cfg, const std::string& resume_from) {
  cfg.validate();
  kernels::set_backend(cfg.backend == "serial" ? kernels::Backend::Serial
                                               : kernels::Backend::Parallel);

  auto store_x = imaging::load_frame_store(cfg.data_x, "X");
  auto store_y = imaging::load_frame_store(cfg.data_y, "Y");

  TrainState state;
  if (resume_from.empty()) {
    state = init_state(cfg);
  } else {
    std::string warning;
    state = checkpoint::load_checkpoint_into(resume_from, cfg, &warning);
    if (!warning.empty()) std::cerr << warning << "\n";
  }

  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream log(std::filesystem::path(cfg.output_dir) / "train.log", std::ios::app);
  if (!log) throw std::runtime_error("cannot open train.log in " + cfg.output_dir);

  while (state.step < cfg.total_steps) {
    auto [bx, by] = imaging::sample_unpaired_batch(store_x, cfg.crop_x, store_y, cfg.crop_y,
                                                   cfg.batch_size, state.data_rng);
    imaging::validate_batch_range(bx);
    imaging::validate_batch_range(by);
    auto report = train_step(state, bx, by, cfg);
    log << losses::format_loss_line(report) << "\n";
    log.flush();
    if (state.step % cfg.checkpoint_interval == 0 || state.step == cfg.total_steps)
      checkpoint::save_checkpoint(
          state, cfg, std::filesystem::path(cfg.output_dir) / checkpoint::checkpoint_name(state.step));
  }
  return state;
}

}  // namespace facecycle::training
