#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "facecycle/imaging.hpp"
#include "facecycle/tensor.hpp"

namespace facecycle::inference {

struct TranslationJob {
  std::filesystem::path checkpoint;
  std::string direction;  // "XtoY" | "YtoX"
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  // Absent: the training crop recorded in the checkpoint for the source domain.
  std::optional<imaging::CropSpec> crop;
};

/// Translates every frame of the input store in filename order, writing
/// frame_000001.png onward plus a frames.txt manifest. Returns the frame
/// count. Output bytes depend only on the checkpoint and inputs.
int translate_frames(const TranslationJob& job);

struct RoundTripResult {
  double l1 = 0.0;                       // mean |back(forward(x)) - x|
  imaging::ImageU8 grid;                 // rows of [x | forward(x) | back(forward(x))]
};

/// Reconstruction diagnostic for a normalized sample batch through both
/// generators of the checkpoint.
RoundTripResult round_trip_report(const std::filesystem::path& checkpoint, const Tensor4& sample,
                                  const std::string& direction);

}  // namespace facecycle::inference
