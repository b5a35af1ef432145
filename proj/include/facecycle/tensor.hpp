#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace facecycle {

struct Shape4 {
  int n = 0, c = 0, h = 0, w = 0;
  bool operator==(const Shape4&) const = default;
  long long numel() const { return 1LL * n * c * h * w; }
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

/// Dense rank-4 float tensor, NCHW row-major.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int n, int c, int h, int w, float fill = 0.0f)
      : n_(n), c_(c), h_(h), w_(w), v_(static_cast<size_t>(1LL * n * c * h * w), fill) {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw std::invalid_argument("negative tensor dim");
  }
  explicit Tensor4(const Shape4& s, float fill = 0.0f) : Tensor4(s.n, s.c, s.h, s.w, fill) {}

  static Tensor4 zeros_like(const Tensor4& t) { return Tensor4(t.n_, t.c_, t.h_, t.w_); }

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  Shape4 shape() const { return {n_, c_, h_, w_}; }
  size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  float* data() { return v_.data(); }
  const float* data() const { return v_.data(); }
  std::vector<float>& vec() { return v_; }
  const std::vector<float>& vec() const { return v_; }

  float& operator[](size_t i) { return v_[i]; }
  float operator[](size_t i) const { return v_[i]; }

  float& at(int n, int c, int y, int x) { return v_[idx(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const { return v_[idx(n, c, y, x)]; }

  float* plane(int n, int c) { return v_.data() + (static_cast<size_t>(n) * c_ + c) * h_ * w_; }
  const float* plane(int n, int c) const {
    return v_.data() + (static_cast<size_t>(n) * c_ + c) * h_ * w_;
  }
  float* row(int n, int c, int y) { return plane(n, c) + static_cast<size_t>(y) * w_; }
  const float* row(int n, int c, int y) const { return plane(n, c) + static_cast<size_t>(y) * w_; }

  void fill(float v) { std::fill(v_.begin(), v_.end(), v); }

 private:
  size_t idx(int n, int c, int y, int x) const {
    return ((static_cast<size_t>(n) * c_ + c) * h_ + y) * w_ + x;
  }

  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<float> v_;
};

inline void check_same_shape(const Tensor4& a, const Tensor4& b, const char* where) {
  if (!(a.shape() == b.shape()))
    throw std::invalid_argument(std::string(where) + ": shape mismatch " + a.shape().str() +
                                " vs " + b.shape().str());
}

}  // namespace facecycle
