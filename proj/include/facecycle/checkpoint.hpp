#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include "facecycle/training.hpp"

namespace facecycle::checkpoint {

/// Versioned container: config hash, step, data-rng state, the full effective
/// config (JSON), every network parameter tensor and optimizer moment by
/// name. Written atomically (temp file + rename).
void save_checkpoint(training::TrainState& state, const config::TrainConfig& cfg,
                     const std::filesystem::path& path);

/// Rebuilds the state from the config embedded in the file.
std::pair<config::TrainConfig, training::TrainState> load_checkpoint(
    const std::filesystem::path& path);

/// Rebuilds the state from `active_cfg` and fills it from the file; throws on
/// any structural mismatch (missing/extra/mis-sized tensors). When the stored
/// config hash differs from active_cfg's, *hash_warning is set to a message.
training::TrainState load_checkpoint_into(const std::filesystem::path& path,
                                          const config::TrainConfig& active_cfg,
                                          std::string* hash_warning = nullptr);

std::string checkpoint_name(long long step);  // ckpt_step<NNNNNN>.bin

}  // namespace facecycle::checkpoint
