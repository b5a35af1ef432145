// OpenMP kernels. Work is split only across independent output elements and
// every per-element accumulation runs in a fixed order, so results are
// identical for any thread count.

#include <cmath>
#include <cstring>

#include "facecycle/kernels.hpp"

namespace facecycle::kernels::par {

namespace {
// Valid ox range so that ix = ox*stride + kx - pad stays inside [0, in_w).
inline void ox_bounds(int in_w, int out_w, int stride, int pad, int kx, int& lo, int& hi) {
  int shift = pad - kx;
  lo = shift > 0 ? (shift + stride - 1) / stride : 0;
  int last = in_w - 1 - kx + pad;
  hi = last < 0 ? 0 : std::min(out_w, last / stride + 1);
  if (hi < lo) hi = lo;
}
}  // namespace

namespace {

// 3x3 / stride 1 / pad 1: one fused pass per row instead of nine tap passes.
void conv3x3_forward(const Tensor4& x, const Tensor4& w, const std::vector<float>& b, Tensor4& y) {
  const int N = x.n(), Ci = x.c(), H = x.h(), W = x.w();
  const int Co = w.n();
  y = Tensor4(N, Co, H, W);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co) {
      const float bias = b.empty() ? 0.0f : b[co];
      for (int oy = 0; oy < H; ++oy) {
        float* yrow = y.row(n, co, oy);
        for (int ox = 0; ox < W; ++ox) yrow[ox] = bias;
        for (int ci = 0; ci < Ci; ++ci)
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy + ky - 1;
            if (iy < 0 || iy >= H) continue;
            const float* xrow = x.row(n, ci, iy);
            const float* wt = w.row(co, ci, ky);
            const float w0 = wt[0], w1 = wt[1], w2 = wt[2];
            yrow[0] += w1 * xrow[0] + w2 * xrow[1];
#pragma omp simd
            for (int ox = 1; ox < W - 1; ++ox)
              yrow[ox] += w0 * xrow[ox - 1] + w1 * xrow[ox] + w2 * xrow[ox + 1];
            yrow[W - 1] += w0 * xrow[W - 2] + w1 * xrow[W - 1];
          }
      }
    }
}

void conv3x3_backward_input(const Tensor4& dy, const Tensor4& w, Tensor4& dx) {
  const int N = dy.n(), Co = dy.c(), H = dx.h(), W = dx.w();
  const int Ci = w.c();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int ci = 0; ci < Ci; ++ci) {
      for (int iy = 0; iy < H; ++iy) std::memset(dx.row(n, ci, iy), 0, sizeof(float) * W);
      for (int co = 0; co < Co; ++co)
        for (int ky = 0; ky < 3; ++ky)
          for (int iy = 0; iy < H; ++iy) {
            const int oy = iy + 1 - ky;
            if (oy < 0 || oy >= H) continue;
            float* out = dx.row(n, ci, iy);
            const float* g = dy.row(n, co, oy);
            const float* wt = w.row(co, ci, ky);
            const float w0 = wt[0], w1 = wt[1], w2 = wt[2];
            out[0] += w0 * g[1] + w1 * g[0];
#pragma omp simd
            for (int ix = 1; ix < W - 1; ++ix)
              out[ix] += w0 * g[ix + 1] + w1 * g[ix] + w2 * g[ix - 1];
            out[W - 1] += w1 * g[W - 1] + w2 * g[W - 2];
          }
    }
}

// Stride-1 weight gradients as one long dot per kernel tap over the flattened
// plane, then subtracting the row-wrap terms the flat view wrongly includes.
// Long contiguous reductions vectorize where per-row dots cannot.
void conv_s1_backward_params(const Tensor4& dy, const Tensor4& x, int pad, Tensor4& dw,
                             std::vector<float>& db) {
  const int N = dy.n(), Co = dy.c(), Ho = dy.h(), Wo = dy.w();
  const int Ci = x.c(), H = x.h(), W = x.w(), K = dw.h();
#pragma omp parallel for schedule(static)
  for (int co = 0; co < Co; ++co) {
    float bacc = 0.0f;
    for (int n = 0; n < N; ++n) {
      const float* p = dy.plane(n, co);
      for (int i = 0; i < Ho * Wo; ++i) bacc += p[i];
    }
    db[co] += bacc;
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < Co; ++co)
    for (int ci = 0; ci < Ci; ++ci)
      for (int ky = 0; ky < K; ++ky) {
        const int oy0 = std::max(0, pad - ky);
        const int oy1 = std::min(Ho, H + pad - ky);
        if (oy0 >= oy1) continue;
        for (int kx = 0; kx < K; ++kx) {
          const int shift = kx - pad;
          float acc = 0.0f;
          for (int n = 0; n < N; ++n) {
            const float* gp = dy.plane(n, co);
            const float* xp = x.plane(n, ci) + (ky - pad) * W + shift;
            int i0 = oy0 * Wo + std::max(0, -shift);
            int i1 = oy1 * Wo - std::max(0, shift);
            float a = 0.0f;
#pragma omp simd reduction(+ : a)
            for (int i = i0; i < i1; ++i) a += gp[i] * xp[i];
            // remove the wrapped boundary columns the flat dot included
            if (shift < 0) {
              for (int oy = oy0 + 1; oy < oy1; ++oy)
                for (int ox = 0; ox < -shift; ++ox)
                  a -= gp[oy * Wo + ox] * xp[oy * Wo + ox];
            } else if (shift > 0) {
              for (int oy = oy0; oy < oy1 - 1; ++oy)
                for (int ox = Wo - shift; ox < Wo; ++ox)
                  a -= gp[oy * Wo + ox] * xp[oy * Wo + ox];
            }
            acc += a;
          }
          dw.at(co, ci, ky, kx) += acc;
        }
      }
}

}  // namespace

void conv2d_forward(const Tensor4& x, const Tensor4& w, const std::vector<float>& b, int stride,
                    int pad, Tensor4& y) {
  const int N = x.n(), Ci = x.c(), H = x.h(), W = x.w();
  const int Co = w.n(), K = w.h();
  const int Ho = conv_out_size(H, K, stride, pad), Wo = conv_out_size(W, K, stride, pad);
  if (K == 3 && stride == 1 && pad == 1 && W >= 2) {
    conv3x3_forward(x, w, b, y);
    return;
  }
  y = Tensor4(N, Co, Ho, Wo);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co) {
      const float bias = b.empty() ? 0.0f : b[co];
      for (int oy = 0; oy < Ho; ++oy) {
        float* yrow = y.row(n, co, oy);
        for (int ox = 0; ox < Wo; ++ox) yrow[ox] = bias;
        for (int ci = 0; ci < Ci; ++ci)
          for (int ky = 0; ky < K; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= H) continue;
            const float* xrow = x.row(n, ci, iy);
            const float* wrow = w.row(co, ci, ky);
            for (int kx = 0; kx < K; ++kx) {
              const float wv = wrow[kx];
              int lo, hi;
              ox_bounds(W, Wo, stride, pad, kx, lo, hi);
              const float* xs = xrow + kx - pad;
              if (stride == 1) {
                for (int ox = lo; ox < hi; ++ox) yrow[ox] += wv * xs[ox];
              } else {
                for (int ox = lo; ox < hi; ++ox) yrow[ox] += wv * xs[ox * stride];
              }
            }
          }
      }
    }
}

void conv2d_backward_input(const Tensor4& dy, const Tensor4& w, int stride, int pad, Tensor4& dx) {
  const int N = dy.n(), Co = dy.c(), Ho = dy.h(), Wo = dy.w();
  const int Ci = w.c(), K = w.h();
  const int H = dx.h(), W = dx.w();
  if (K == 3 && stride == 1 && pad == 1 && W >= 2) {
    conv3x3_backward_input(dy, w, dx);
    return;
  }
  if (stride == 1) {
    // Correlation with the flipped kernel; contiguous inner loop.
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n)
      for (int ci = 0; ci < Ci; ++ci) {
        for (int iy = 0; iy < H; ++iy) {
          float* out = dx.row(n, ci, iy);
          std::memset(out, 0, sizeof(float) * W);
        }
        for (int co = 0; co < Co; ++co)
          for (int ky = 0; ky < K; ++ky)
            for (int iy = 0; iy < H; ++iy) {
              const int oy = iy + pad - ky;
              if (oy < 0 || oy >= Ho) continue;
              float* out = dx.row(n, ci, iy);
              const float* grow = dy.row(n, co, oy);
              for (int kx = 0; kx < K; ++kx) {
                const float wv = w.at(co, ci, ky, kx);
                const int shift = pad - kx;
                const int lo = std::max(0, -shift);
                const int hi = std::min(W, Wo - shift);
                const float* gs = grow + shift;
                for (int ix = lo; ix < hi; ++ix) out[ix] += wv * gs[ix];
              }
            }
      }
    return;
  }
  // Strided case: scatter dy through the kernel taps. Each thread owns an
  // (n, ci) plane, so writes never race and the (co, ky, kx, oy, ox) order is
  // fixed per element.
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int ci = 0; ci < Ci; ++ci) {
      for (int iy = 0; iy < H; ++iy)
        std::memset(dx.row(n, ci, iy), 0, sizeof(float) * W);
      for (int co = 0; co < Co; ++co)
        for (int ky = 0; ky < K; ++ky)
          for (int kx = 0; kx < K; ++kx) {
            const float wv = w.at(co, ci, ky, kx);
            int lo, hi;
            ox_bounds(W, Wo, stride, pad, kx, lo, hi);
            for (int oy = 0; oy < Ho; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= H) continue;
              const float* grow = dy.row(n, co, oy);
              float* out = dx.row(n, ci, iy) + kx - pad;
              for (int ox = lo; ox < hi; ++ox) out[ox * stride] += wv * grow[ox];
            }
          }
    }
}

void conv2d_backward_params(const Tensor4& dy, const Tensor4& x, int stride, int pad, Tensor4& dw,
                            std::vector<float>& db) {
  const int N = dy.n(), Co = dy.c(), Ho = dy.h(), Wo = dy.w();
  const int Ci = x.c(), H = x.h(), W = x.w(), K = dw.h();
  if (stride == 1 && Wo == W && Ho == H && W > 2 * (K - 1)) {
    conv_s1_backward_params(dy, x, pad, dw, db);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int co = 0; co < Co; ++co) {
    float bacc = 0.0f;
    for (int n = 0; n < N; ++n)
      for (int oy = 0; oy < Ho; ++oy) {
        const float* grow = dy.row(n, co, oy);
        for (int ox = 0; ox < Wo; ++ox) bacc += grow[ox];
      }
    db[co] += bacc;
  }
  // One pass over the dy plane per (co, ci) pair accumulates the whole K x K
  // tap block, keeping the rows hot in cache.
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < Co; ++co)
    for (int ci = 0; ci < Ci; ++ci) {
      std::vector<float> acc(static_cast<size_t>(K) * K, 0.0f);
      for (int n = 0; n < N; ++n)
        for (int oy = 0; oy < Ho; ++oy) {
          const float* grow = dy.row(n, co, oy);
          for (int ky = 0; ky < K; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= H) continue;
            const float* xrow = x.row(n, ci, iy);
            for (int kx = 0; kx < K; ++kx) {
              int lo, hi;
              ox_bounds(W, Wo, stride, pad, kx, lo, hi);
              const float* xs = xrow + kx - pad;
              float a = 0.0f;
              if (stride == 1) {
#pragma omp simd reduction(+ : a)
                for (int ox = lo; ox < hi; ++ox) a += grow[ox] * xs[ox];
              } else {
#pragma omp simd reduction(+ : a)
                for (int ox = lo; ox < hi; ++ox) a += grow[ox] * xs[ox * stride];
              }
              acc[static_cast<size_t>(ky) * K + kx] += a;
            }
          }
        }
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx)
          dw.at(co, ci, ky, kx) += acc[static_cast<size_t>(ky) * K + kx];
    }
}

void instance_norm_forward(const Tensor4& x, const std::vector<float>& gamma,
                           const std::vector<float>& beta, float eps, Tensor4& y, Tensor4& xhat,
                           std::vector<float>& inv_std) {
  const int N = x.n(), C = x.c(), M = x.h() * x.w();
  y = Tensor4::zeros_like(x);
  xhat = Tensor4::zeros_like(x);
  inv_std.assign(static_cast<size_t>(N) * C, 0.0f);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* p = x.plane(n, c);
      double mean = 0.0;
      for (int i = 0; i < M; ++i) mean += p[i];
      mean /= M;
      double var = 0.0;
      for (int i = 0; i < M; ++i) var += (p[i] - mean) * (p[i] - mean);
      var /= M;
      const float is = 1.0f / std::sqrt(static_cast<float>(var) + eps);
      inv_std[static_cast<size_t>(n) * C + c] = is;
      const float mu = static_cast<float>(mean), g = gamma[c], b = beta[c];
      float* xh = xhat.plane(n, c);
      float* yo = y.plane(n, c);
      for (int i = 0; i < M; ++i) {
        xh[i] = (p[i] - mu) * is;
        yo[i] = xh[i] * g + b;
      }
    }
}

void instance_norm_backward(const Tensor4& dy, const Tensor4& xhat,
                            const std::vector<float>& inv_std, const std::vector<float>& gamma,
                            Tensor4& dx, std::vector<float>& dgamma, std::vector<float>& dbeta) {
  const int N = dy.n(), C = dy.c(), M = dy.h() * dy.w();
  dx = Tensor4::zeros_like(dy);
  // dgamma/dbeta reduce over n; keep that reduction ordered by running it per
  // channel, parallel across channels only.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    double dg = 0.0, dbv = 0.0;
    for (int n = 0; n < N; ++n) {
      const float* g = dy.plane(n, c);
      const float* xh = xhat.plane(n, c);
      for (int i = 0; i < M; ++i) {
        dg += static_cast<double>(g[i]) * xh[i];
        dbv += g[i];
      }
    }
    dgamma[c] += static_cast<float>(dg);
    dbeta[c] += static_cast<float>(dbv);
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* g = dy.plane(n, c);
      const float* xh = xhat.plane(n, c);
      const float is = inv_std[static_cast<size_t>(n) * C + c];
      double sum_g = 0.0, sum_gx = 0.0;
      for (int i = 0; i < M; ++i) {
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * xh[i];
      }
      float* out = dx.plane(n, c);
      const float k = gamma[c] * is / M;
      const float sg = static_cast<float>(sum_g), sgx = static_cast<float>(sum_gx);
      for (int i = 0; i < M; ++i) out[i] = k * (M * g[i] - sg - xh[i] * sgx);
    }
}

void leaky_relu_forward(const Tensor4& x, float slope, Tensor4& y) {
  y = Tensor4::zeros_like(x);
  const float* xi = x.data();
  float* yo = y.data();
  const long long sz = static_cast<long long>(x.size());
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < sz; ++i) yo[i] = xi[i] > 0.0f ? xi[i] : slope * xi[i];
}

void leaky_relu_backward(const Tensor4& dy, const Tensor4& x, float slope, Tensor4& dx) {
  dx = Tensor4::zeros_like(x);
  const float* g = dy.data();
  const float* xi = x.data();
  float* out = dx.data();
  const long long sz = static_cast<long long>(x.size());
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < sz; ++i) out[i] = xi[i] > 0.0f ? g[i] : slope * g[i];
}

void tanh_forward(const Tensor4& x, Tensor4& y) {
  y = Tensor4::zeros_like(x);
  const float* xi = x.data();
  float* yo = y.data();
  const long long sz = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < sz; ++i) yo[i] = std::tanh(xi[i]);
}

void tanh_backward(const Tensor4& dy, const Tensor4& y, Tensor4& dx) {
  dx = Tensor4::zeros_like(y);
  const float* g = dy.data();
  const float* yi = y.data();
  float* out = dx.data();
  const long long sz = static_cast<long long>(y.size());
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < sz; ++i) out[i] = g[i] * (1.0f - yi[i] * yi[i]);
}

void upsample2x_forward(const Tensor4& x, Tensor4& y) {
  const int N = x.n(), C = x.c(), H = x.h(), W = x.w();
  y = Tensor4(N, C, 2 * H, 2 * W);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int oy = 0; oy < 2 * H; ++oy) {
        const float* xrow = x.row(n, c, oy / 2);
        float* yrow = y.row(n, c, oy);
        for (int ox = 0; ox < 2 * W; ++ox) yrow[ox] = xrow[ox / 2];
      }
}

void upsample2x_backward(const Tensor4& dy, Tensor4& dx) {
  const int N = dy.n(), C = dy.c(), H = dy.h() / 2, W = dy.w() / 2;
  dx = Tensor4(N, C, H, W);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int iy = 0; iy < H; ++iy) {
        const float* r0 = dy.row(n, c, 2 * iy);
        const float* r1 = dy.row(n, c, 2 * iy + 1);
        float* out = dx.row(n, c, iy);
        for (int ix = 0; ix < W; ++ix)
          out[ix] = r0[2 * ix] + r0[2 * ix + 1] + r1[2 * ix] + r1[2 * ix + 1];
      }
}

void add(const Tensor4& a, const Tensor4& b, Tensor4& out) {
  check_same_shape(a, b, "add");
  out = Tensor4::zeros_like(a);
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
  const long long sz = static_cast<long long>(a.size());
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < sz; ++i) po[i] = pa[i] + pb[i];
}

}  // namespace facecycle::kernels::par
