#include "facecycle/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace facecycle::imaging {

namespace {

const std::set<std::string> kImageExtensions = {".png", ".jpg", ".jpeg"};

bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return kImageExtensions.count(ext) > 0;
}

ImageU8 from_mat(const cv::Mat& bgr) {
  ImageU8 img(bgr.rows, bgr.cols, 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(y, x, 0) = row[x][2];
      img.at(y, x, 1) = row[x][1];
      img.at(y, x, 2) = row[x][0];
    }
  }
  return img;
}

cv::Mat to_mat(const ImageU8& img) {
  cv::Mat bgr(img.h, img.w, CV_8UC3);
  for (int y = 0; y < img.h; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.w; ++x) {
      row[x][2] = img.at(y, x, 0);
      row[x][1] = img.at(y, x, 1);
      row[x][0] = img.at(y, x, 2);
    }
  }
  return bgr;
}

}  // namespace

ImageU8 load_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw std::runtime_error("corrupt frame " + path.filename().string());
  return from_mat(m);
}

void save_image(const std::filesystem::path& path, const ImageU8& img) {
  if (!cv::imwrite(path.string(), to_mat(img)))
    throw std::runtime_error("cannot write image " + path.string());
}

FrameStore load_frame_store(const std::filesystem::path& dir, const std::string& domain_tag) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("no frames: " + dir.string() + " is not a directory");
  FrameStore store;
  store.root = dir;
  store.domain_tag = domain_tag;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && has_image_extension(entry.path()))
      store.names.push_back(entry.path().filename().string());
  std::sort(store.names.begin(), store.names.end());
  if (store.names.empty()) throw std::runtime_error("no frames in " + dir.string());
  store.frames.reserve(store.names.size());
  int channels = -1;
  for (const auto& name : store.names) {
    ImageU8 img = load_image(dir / name);
    if (channels < 0) channels = img.c;
    if (img.c != channels) throw std::runtime_error("corrupt frame " + name);
    store.frames.push_back(std::move(img));
  }
  return store;
}

ImageU8 crop_and_scale(const ImageU8& frame, const CropSpec& spec) {
  if (spec.output_side <= 0) throw std::invalid_argument("output side must be > 0");
  if (spec.left < 0 || spec.top < 0 || spec.width <= 0 || spec.height <= 0 ||
      spec.left + spec.width > frame.w || spec.top + spec.height > frame.h)
    throw std::invalid_argument("crop out of bounds");

  ImageU8 crop(spec.height, spec.width, frame.c);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      for (int ch = 0; ch < frame.c; ++ch)
        crop.at(y, x, ch) = frame.at(spec.top + y, spec.left + x, ch);
  if (spec.width == spec.output_side && spec.height == spec.output_side) return crop;

  cv::Mat resized;
  cv::resize(to_mat(crop), resized, cv::Size(spec.output_side, spec.output_side), 0, 0,
             cv::INTER_LINEAR);
  return from_mat(resized);
}

Tensor4 to_normalized(const ImageU8& img) {
  Tensor4 out(1, 3, img.h, img.w);
  to_normalized(img, out, 0);
  return out;
}

void to_normalized(const ImageU8& img, Tensor4& batch, int batch_index) {
  if (batch.c() != 3 || batch.h() != img.h || batch.w() != img.w)
    throw std::invalid_argument("to_normalized: batch shape mismatch");
  for (int ch = 0; ch < 3; ++ch) {
    float* plane = batch.plane(batch_index, ch);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        plane[static_cast<size_t>(y) * img.w + x] = img.at(y, x, ch) / 127.5f - 1.0f;
  }
}

ImageU8 from_normalized(const Tensor4& batch, int batch_index) {
  ImageU8 img(batch.h(), batch.w(), 3);
  for (int ch = 0; ch < 3; ++ch) {
    const float* plane = batch.plane(batch_index, ch);
    for (int y = 0; y < batch.h(); ++y)
      for (int x = 0; x < batch.w(); ++x) {
        float v = plane[static_cast<size_t>(y) * batch.w() + x];
        v = std::clamp(v, -1.0f, 1.0f);
        img.at(y, x, ch) = static_cast<uint8_t>(std::lround((v + 1.0f) * 127.5f));
      }
  }
  return img;
}

CropSpec effective_crop(const ImageU8& frame, const CropSpec& spec) {
  if (spec.width > 0 && spec.height > 0) return spec;
  CropSpec full = spec;
  full.left = 0;
  full.top = 0;
  full.width = frame.w;
  full.height = frame.h;
  return full;
}

std::pair<Tensor4, Tensor4> sample_unpaired_batch(const FrameStore& store_x, const CropSpec& crop_x,
                                                  const FrameStore& store_y, const CropSpec& crop_y,
                                                  int n, Rng& rng) {
  if (store_x.size() == 0 || store_y.size() == 0)
    throw std::invalid_argument("sample_unpaired_batch: empty store");
  if (n < 1) throw std::invalid_argument("sample_unpaired_batch: n must be >= 1");
  std::vector<size_t> ix(n), iy(n);
  for (int i = 0; i < n; ++i) ix[i] = rng.bounded(store_x.size());
  for (int i = 0; i < n; ++i) iy[i] = rng.bounded(store_y.size());

  Tensor4 bx(n, 3, crop_x.output_side, crop_x.output_side);
  Tensor4 by(n, 3, crop_y.output_side, crop_y.output_side);
  for (int i = 0; i < n; ++i) {
    const auto& fx = store_x.frames[ix[i]];
    const auto& fy = store_y.frames[iy[i]];
    to_normalized(crop_and_scale(fx, effective_crop(fx, crop_x)), bx, i);
    to_normalized(crop_and_scale(fy, effective_crop(fy, crop_y)), by, i);
  }
  return {std::move(bx), std::move(by)};
}

void validate_batch_range(const Tensor4& batch) {
  for (size_t i = 0; i < batch.size(); ++i)
    if (!(batch[i] >= -1.0f && batch[i] <= 1.0f))
      throw std::runtime_error("image batch value outside [-1, 1]");
}

std::string frame_name(int index_one_based) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.png", index_one_based);
  return buf;
}

}  // namespace facecycle::imaging
