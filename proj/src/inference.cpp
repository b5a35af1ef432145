#include "facecycle/inference.hpp"

#include <fstream>

#include "facecycle/checkpoint.hpp"
#include "facecycle/kernels.hpp"
#include "facecycle/losses.hpp"

namespace facecycle::inference {

namespace {

void check_direction(const std::string& direction) {
  if (direction != "XtoY" && direction != "YtoX")
    throw std::invalid_argument("direction must be XtoY or YtoX");
}

}  // namespace

int translate_frames(const TranslationJob& job) {
  check_direction(job.direction);
  auto [cfg, state] = checkpoint::load_checkpoint(job.checkpoint);
  kernels::set_backend(cfg.backend == "serial" ? kernels::Backend::Serial
                                               : kernels::Backend::Parallel);
  const bool x_to_y = job.direction == "XtoY";
  const netspec::Generator& gen = x_to_y ? state.g : state.f;
  const imaging::CropSpec crop = job.crop.value_or(x_to_y ? cfg.crop_x : cfg.crop_y);

  auto store = imaging::load_frame_store(job.input_dir, x_to_y ? "X" : "Y");
  std::filesystem::create_directories(job.output_dir);

  std::ofstream manifest(job.output_dir / "frames.txt", std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write manifest in " + job.output_dir.string());
  for (size_t i = 0; i < store.size(); ++i) {
    const auto& frame = store.frames[i];
    Tensor4 input =
        imaging::to_normalized(imaging::crop_and_scale(frame, imaging::effective_crop(frame, crop)));
    Tensor4 output = gen.forward(input);
    std::string name = imaging::frame_name(static_cast<int>(i) + 1);
    imaging::save_image(job.output_dir / name, imaging::from_normalized(output, 0));
    manifest << name << "\n";
  }
  manifest.flush();
  return static_cast<int>(store.size());
}

RoundTripResult round_trip_report(const std::filesystem::path& ckpt_path, const Tensor4& sample,
                                  const std::string& direction) {
  check_direction(direction);
  auto [cfg, state] = checkpoint::load_checkpoint(ckpt_path);
  kernels::set_backend(cfg.backend == "serial" ? kernels::Backend::Serial
                                               : kernels::Backend::Parallel);
  const bool x_to_y = direction == "XtoY";
  const netspec::Generator& fwd = x_to_y ? state.g : state.f;
  const netspec::Generator& back = x_to_y ? state.f : state.g;

  Tensor4 mid = fwd.forward(sample);
  Tensor4 recon = back.forward(mid);
  RoundTripResult result;
  result.l1 = losses::mean_abs_diff(recon, sample);

  const int n = sample.n(), h = sample.h(), w = sample.w();
  result.grid = imaging::ImageU8(n * h, 3 * w, 3);
  for (int i = 0; i < n; ++i) {
    imaging::ImageU8 cols[3] = {imaging::from_normalized(sample, i),
                                imaging::from_normalized(mid, i),
                                imaging::from_normalized(recon, i)};
    for (int col = 0; col < 3; ++col)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int ch = 0; ch < 3; ++ch)
            result.grid.at(i * h + y, col * w + x, ch) = cols[col].at(y, x, ch);
  }
  return result;
}

}  // namespace facecycle::inference
