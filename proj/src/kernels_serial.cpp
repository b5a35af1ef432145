// Reference kernels: the most literal implementation of each operation.
// Kept deliberately naive; the OpenMP kernels in kernels_parallel.cpp are
// validated against these.

#include <cmath>
#include <stdexcept>

#include "facecycle/kernels.hpp"

namespace facecycle::kernels {

int conv_out_size(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

namespace serial {

void conv2d_forward(const Tensor4& x, const Tensor4& w, const std::vector<float>& b, int stride,
                    int pad, Tensor4& y) {
  const int N = x.n(), Ci = x.c(), H = x.h(), W = x.w();
  const int Co = w.n(), K = w.h();
  const int Ho = conv_out_size(H, K, stride, pad), Wo = conv_out_size(W, K, stride, pad);
  y = Tensor4(N, Co, Ho, Wo);
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          float acc = b.empty() ? 0.0f : b[co];
          for (int ci = 0; ci < Ci; ++ci)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                int iy = oy * stride + ky - pad;
                int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += x.at(n, ci, iy, ix) * w.at(co, ci, ky, kx);
              }
          y.at(n, co, oy, ox) = acc;
        }
}

void conv2d_backward_input(const Tensor4& dy, const Tensor4& w, int stride, int pad, Tensor4& dx) {
  const int N = dy.n(), Co = dy.c(), Ho = dy.h(), Wo = dy.w();
  const int Ci = w.c(), K = w.h();
  const int H = dx.h(), W = dx.w();
  dx.fill(0.0f);
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          float g = dy.at(n, co, oy, ox);
          for (int ci = 0; ci < Ci; ++ci)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                int iy = oy * stride + ky - pad;
                int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                dx.at(n, ci, iy, ix) += g * w.at(co, ci, ky, kx);
              }
        }
}

void conv2d_backward_params(const Tensor4& dy, const Tensor4& x, int stride, int pad, Tensor4& dw,
                            std::vector<float>& db) {
  const int N = dy.n(), Co = dy.c(), Ho = dy.h(), Wo = dy.w();
  const int Ci = x.c(), H = x.h(), W = x.w(), K = dw.h();
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          float g = dy.at(n, co, oy, ox);
          db[co] += g;
          for (int ci = 0; ci < Ci; ++ci)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                int iy = oy * stride + ky - pad;
                int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                dw.at(co, ci, ky, kx) += g * x.at(n, ci, iy, ix);
              }
        }
}

void instance_norm_forward(const Tensor4& x, const std::vector<float>& gamma,
                           const std::vector<float>& beta, float eps, Tensor4& y, Tensor4& xhat,
                           std::vector<float>& inv_std) {
  const int N = x.n(), C = x.c(), M = x.h() * x.w();
  y = Tensor4::zeros_like(x);
  xhat = Tensor4::zeros_like(x);
  inv_std.assign(static_cast<size_t>(N) * C, 0.0f);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* p = x.plane(n, c);
      double mean = 0.0;
      for (int i = 0; i < M; ++i) mean += p[i];
      mean /= M;
      double var = 0.0;
      for (int i = 0; i < M; ++i) var += (p[i] - mean) * (p[i] - mean);
      var /= M;
      float is = 1.0f / std::sqrt(static_cast<float>(var) + eps);
      inv_std[static_cast<size_t>(n) * C + c] = is;
      float* xh = xhat.plane(n, c);
      float* yo = y.plane(n, c);
      for (int i = 0; i < M; ++i) {
        xh[i] = (p[i] - static_cast<float>(mean)) * is;
        yo[i] = xh[i] * gamma[c] + beta[c];
      }
    }
}

void instance_norm_backward(const Tensor4& dy, const Tensor4& xhat,
                            const std::vector<float>& inv_std, const std::vector<float>& gamma,
                            Tensor4& dx, std::vector<float>& dgamma, std::vector<float>& dbeta) {
  const int N = dy.n(), C = dy.c(), M = dy.h() * dy.w();
  dx = Tensor4::zeros_like(dy);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* g = dy.plane(n, c);
      const float* xh = xhat.plane(n, c);
      float is = inv_std[static_cast<size_t>(n) * C + c];
      double sum_g = 0.0, sum_gx = 0.0;
      for (int i = 0; i < M; ++i) {
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * xh[i];
      }
      dgamma[c] += static_cast<float>(sum_gx);
      dbeta[c] += static_cast<float>(sum_g);
      float* out = dx.plane(n, c);
      float k = gamma[c] * is / M;
      for (int i = 0; i < M; ++i)
        out[i] = k * (M * g[i] - static_cast<float>(sum_g) -
                      xh[i] * static_cast<float>(sum_gx));
    }
}

void leaky_relu_forward(const Tensor4& x, float slope, Tensor4& y) {
  y = Tensor4::zeros_like(x);
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void leaky_relu_backward(const Tensor4& dy, const Tensor4& x, float slope, Tensor4& dx) {
  dx = Tensor4::zeros_like(x);
  for (size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0f ? dy[i] : slope * dy[i];
}

void tanh_forward(const Tensor4& x, Tensor4& y) {
  y = Tensor4::zeros_like(x);
  for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward(const Tensor4& dy, const Tensor4& y, Tensor4& dx) {
  dx = Tensor4::zeros_like(y);
  for (size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (1.0f - y[i] * y[i]);
}

void upsample2x_forward(const Tensor4& x, Tensor4& y) {
  const int N = x.n(), C = x.c(), H = x.h(), W = x.w();
  y = Tensor4(N, C, 2 * H, 2 * W);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int oy = 0; oy < 2 * H; ++oy)
        for (int ox = 0; ox < 2 * W; ++ox) y.at(n, c, oy, ox) = x.at(n, c, oy / 2, ox / 2);
}

void upsample2x_backward(const Tensor4& dy, Tensor4& dx) {
  const int N = dy.n(), C = dy.c(), H = dy.h() / 2, W = dy.w() / 2;
  dx = Tensor4(N, C, H, W);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int iy = 0; iy < H; ++iy)
        for (int ix = 0; ix < W; ++ix) {
          float acc = 0.0f;
          for (int sy = 0; sy < 2; ++sy)
            for (int sx = 0; sx < 2; ++sx) acc += dy.at(n, c, 2 * iy + sy, 2 * ix + sx);
          dx.at(n, c, iy, ix) = acc;
        }
}

void add(const Tensor4& a, const Tensor4& b, Tensor4& out) {
  check_same_shape(a, b, "add");
  out = Tensor4::zeros_like(a);
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
}

}  // namespace serial
}  // namespace facecycle::kernels
