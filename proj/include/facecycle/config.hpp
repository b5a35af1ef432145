#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facecycle/imaging.hpp"
#include "facecycle/losses.hpp"
#include "facecycle/netspec.hpp"
#include "facecycle/optim.hpp"

namespace facecycle::config {

struct TrainConfig {
  int image_size = 128;
  int batch_size = 1;
  long long total_steps = 200000;
  uint64_t seed = 1;
  std::string backend = "parallel";  // "parallel" | "serial"

  optim::OptimizerConfig optimizer;
  losses::LossWeights loss_weights;
  std::string cycle_norm = "l1";  // "l1" | "l2"
  bool average_d_losses = false;
  int d_steps_per_g = 1;

  // One or two stack strings per direction.
  std::vector<std::string> discriminators_y, discriminators_x;
  int discriminator_base_width = 64;
  std::string discriminator_norm = "instance";

  netspec::GeneratorSpec generator;

  std::string data_x, data_y;
  // width/height 0 means "use the full frame".
  imaging::CropSpec crop_x, crop_y;

  long long checkpoint_interval = 1000;
  std::string output_dir = "runs/default";

  void validate() const;
  losses::CycleNorm cycle_norm_enum() const;
  netspec::ConvStackSpec disc_stack(const std::string& text) const;
};

/// Full-scale defaults at 128x128 (97 + 42 dual discriminators); a
/// proportionally scaled variant at 64x64 for desk-scale runs.
TrainConfig default_config(int image_size = 128);

TrainConfig parse_config_json(const std::string& text);
TrainConfig parse_config_file(const std::string& path,
                              const std::vector<std::string>& overrides = {});
std::string config_to_json(const TrainConfig& cfg);
uint64_t config_hash(const TrainConfig& cfg);

}  // namespace facecycle::config
