#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "facecycle/rng.hpp"
#include "facecycle/tensor.hpp"

namespace facecycle::imaging {

/// 8-bit RGB image, HWC interleaved.
struct ImageU8 {
  int h = 0, w = 0, c = 3;
  std::vector<uint8_t> v;

  ImageU8() = default;
  ImageU8(int h_, int w_, int c_ = 3, uint8_t fill = 0)
      : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, fill) {}
  uint8_t& at(int y, int x, int ch) { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
  uint8_t at(int y, int x, int ch) const { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
};

struct CropSpec {
  int left = 0, top = 0, width = 0, height = 0;
  int output_side = 128;
};

/// Ordered, named frame collection for one domain. Frames are decoded and
/// held in memory; filename order (lexicographic) defines temporal order.
struct FrameStore {
  std::filesystem::path root;
  std::vector<std::string> names;
  std::vector<ImageU8> frames;
  std::string domain_tag;

  size_t size() const { return frames.size(); }
};

ImageU8 load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const ImageU8& img);

FrameStore load_frame_store(const std::filesystem::path& dir, const std::string& domain_tag);

/// Crop then scale to output_side x output_side with bilinear resampling.
/// An identity-sized crop is returned untouched.
ImageU8 crop_and_scale(const ImageU8& frame, const CropSpec& spec);

/// v -> v / 127.5 - 1
Tensor4 to_normalized(const ImageU8& img);
void to_normalized(const ImageU8& img, Tensor4& batch, int batch_index);

/// v -> round((clamp(v) + 1) * 127.5), round half away from zero.
ImageU8 from_normalized(const Tensor4& batch, int batch_index = 0);

/// Resolves a zero-sized crop to the full frame rectangle.
CropSpec effective_crop(const ImageU8& frame, const CropSpec& spec);

/// n frames drawn independently and uniformly (with replacement) from each
/// store, cropped/scaled/normalized. X indices are drawn before Y indices.
std::pair<Tensor4, Tensor4> sample_unpaired_batch(const FrameStore& store_x, const CropSpec& crop_x,
                                                  const FrameStore& store_y, const CropSpec& crop_y,
                                                  int n, Rng& rng);

/// Throws unless every element lies in [-1, 1].
void validate_batch_range(const Tensor4& batch);

/// frame_000001.png, frame_000002.png, ...
std::string frame_name(int index_one_based);

}  // namespace facecycle::imaging
