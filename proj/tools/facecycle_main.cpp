// facecycle command line: training, frame translation and receptive-field
// tooling behind one entry point. Exit codes: 0 success, 1 runtime failure,
// 2 validation failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facecycle/checkpoint.hpp"
#include "facecycle/config.hpp"
#include "facecycle/inference.hpp"
#include "facecycle/kernels.hpp"
#include "facecycle/netspec.hpp"
#include "facecycle/training.hpp"

namespace fc = facecycle;

namespace {

int run_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& resume) {
  fc::config::TrainConfig cfg = fc::config::parse_config_file(config_path, overrides);
  cfg.validate();
  fc::training::train_loop(cfg, resume);
  return 0;
}

int run_rf(const std::string& stack_text) {
  auto spec = fc::netspec::parse_stack(stack_text);
  std::vector<fc::netspec::RfTraceRow> trace;
  int rf = fc::netspec::receptive_field(spec, &trace);
  for (size_t i = 0; i < trace.size(); ++i)
    std::cout << "layer " << (i + 1) << ": k" << trace[i].kernel << " s" << trace[i].stride
              << " -> r=" << trace[i].r << " j=" << trace[i].j << "\n";
  std::cout << "receptive field: " << rf << "\n";
  return 0;
}

int run_probe_rf(const std::string& stack_text, const std::string& ckpt_path,
                 const std::string& net_name, int input_side, double const_init) {
  fc::netspec::Discriminator disc;
  if (!stack_text.empty()) {
    fc::Rng rng(0);
    disc = fc::netspec::build_discriminator(fc::netspec::parse_stack(stack_text), rng);
    fc::netspec::set_constant_conv_params(disc.net, static_cast<float>(const_init));
  } else {
    auto [cfg, state] = fc::checkpoint::load_checkpoint(ckpt_path);
    auto pick = [&](std::vector<fc::netspec::Discriminator>& side,
                    size_t index) -> fc::netspec::Discriminator {
      if (index >= side.size())
        throw std::invalid_argument("checkpoint has no discriminator " + net_name);
      return std::move(side[index]);
    };
    if (net_name == "dY1")
      disc = pick(state.d_y, 0);
    else if (net_name == "dY2")
      disc = pick(state.d_y, 1);
    else if (net_name == "dX1")
      disc = pick(state.d_x, 0);
    else if (net_name == "dX2")
      disc = pick(state.d_x, 1);
    else
      throw std::invalid_argument("unknown discriminator " + net_name);
  }
  int analytic = fc::netspec::receptive_field(disc.spec);
  int empirical = fc::netspec::empirical_rf_probe(disc, input_side);
  std::cout << "analytic: " << analytic << "\n";
  std::cout << "empirical: " << empirical << "\n";
  if (analytic != empirical) {
    std::cerr << "empirical footprint disagrees with the analytic receptive field\n";
    return 1;
  }
  return 0;
}

int run_translate(const std::string& ckpt, const std::string& direction, const std::string& input,
                  const std::string& output, const std::string& crop_text,
                  const std::string& round_trip_path) {
  fc::inference::TranslationJob job;
  job.checkpoint = ckpt;
  job.direction = direction;
  job.input_dir = input;
  job.output_dir = output;
  if (!crop_text.empty()) {
    fc::imaging::CropSpec crop;
    int consumed = 0;
    if (std::sscanf(crop_text.c_str(), "%d,%d,%d,%d%n", &crop.left, &crop.top, &crop.width,
                    &crop.height, &consumed) != 4 ||
        consumed != static_cast<int>(crop_text.size()))
      throw std::invalid_argument("--crop expects l,t,w,h");
    auto [cfg, state] = fc::checkpoint::load_checkpoint(job.checkpoint);
    crop.output_side = cfg.image_size;
    job.crop = crop;
  }
  int count = fc::inference::translate_frames(job);
  std::cout << "translated " << count << " frames to " << output << "\n";

  if (!round_trip_path.empty()) {
    auto store = fc::imaging::load_frame_store(input, "X");
    auto [cfg, state] = fc::checkpoint::load_checkpoint(job.checkpoint);
    const auto crop = job.crop.value_or(direction == "XtoY" ? cfg.crop_x : cfg.crop_y);
    const auto& frame = store.frames.front();
    fc::Tensor4 sample = fc::imaging::to_normalized(
        fc::imaging::crop_and_scale(frame, fc::imaging::effective_crop(frame, crop)));
    auto result = fc::inference::round_trip_report(job.checkpoint, sample, direction);
    fc::imaging::save_image(round_trip_path, result.grid);
    std::cout << "round trip L1: " << result.l1 << "\n";
  }
  return 0;
}

int run_inspect(const std::string& ckpt_path) {
  auto [cfg, state] = fc::checkpoint::load_checkpoint(ckpt_path);
  std::cout << "step: " << state.step << "\n";
  std::cout << "config hash: " << state.cfg_hash << "\n";
  std::cout << "image size: " << cfg.image_size << "\n";
  std::cout << "G parameters: " << state.g.net.param_count() << "\n";
  std::cout << "F parameters: " << state.f.net.param_count() << "\n";
  for (size_t i = 0; i < state.d_y.size(); ++i)
    std::cout << "DY" << (i + 1) << " stack: " << fc::netspec::format_stack(state.d_y[i].spec)
              << " (rf " << fc::netspec::receptive_field(state.d_y[i].spec)
              << ", parameters " << state.d_y[i].net.param_count() << ")\n";
  for (size_t i = 0; i < state.d_x.size(); ++i)
    std::cout << "DX" << (i + 1) << " stack: " << fc::netspec::format_stack(state.d_x[i].spec)
              << " (rf " << fc::netspec::receptive_field(state.d_x[i].spec)
              << ", parameters " << state.d_x[i].net.param_count() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unpaired face/video translation toolkit"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model from a config file");
  std::string config_path, resume;
  std::vector<std::string> overrides;
  train->add_option("--config", config_path, "experiment config file (JSON)")->required();
  train->add_option("--set", overrides, "override a config key, e.g. --set loss_weights.gamma=0.3");
  train->add_option("--resume", resume, "checkpoint file to resume from");

  auto* translate = app.add_subcommand("translate", "translate a frame directory");
  std::string ckpt, direction, input_dir, output_dir, crop_text, round_trip;
  translate->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  translate->add_option("--direction", direction, "XtoY or YtoX")->required();
  translate->add_option("--input", input_dir, "input frame directory")->required();
  translate->add_option("--output", output_dir, "output directory")->required();
  translate->add_option("--crop", crop_text, "crop rectangle l,t,w,h (default: training crop)");
  translate->add_option("--round-trip", round_trip,
                        "also write a [x | forward | reconstruction] grid image here");

  auto* rf = app.add_subcommand("rf", "analytic receptive field of a conv stack");
  std::string stack_text;
  rf->add_option("stack", stack_text, "comma-separated k<k>s<s>[p<p>] tokens")->required();

  auto* probe = app.add_subcommand("probe-rf", "empirically measure a receptive field");
  std::string probe_stack, probe_ckpt, probe_net = "dY1";
  int input_side = 128;
  double const_init = 0.01;
  probe->add_option("--stack", probe_stack, "conv stack to build and probe");
  probe->add_option("--checkpoint", probe_ckpt, "checkpoint to probe");
  probe->add_option("--net", probe_net, "which discriminator (dY1|dY2|dX1|dX2)");
  probe->add_option("--input-side", input_side, "probe input side length");
  probe->add_option("--const-init", const_init, "constant weight value for --stack probes");

  auto* inspect = app.add_subcommand("inspect", "describe a checkpoint");
  std::string inspect_ckpt;
  inspect->add_option("--checkpoint", inspect_ckpt, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*train) return run_train(config_path, overrides, resume);
    if (*translate)
      return run_translate(ckpt, direction, input_dir, output_dir, crop_text, round_trip);
    if (*rf) return run_rf(stack_text);
    if (*probe) {
      if (probe_stack.empty() == probe_ckpt.empty())
        throw std::invalid_argument("probe-rf needs exactly one of --stack or --checkpoint");
      return run_probe_rf(probe_stack, probe_ckpt, probe_net, input_side, const_init);
    }
    if (*inspect) return run_inspect(inspect_ckpt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
