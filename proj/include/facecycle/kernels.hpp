#pragma once

#include <vector>

#include "facecycle/tensor.hpp"

namespace facecycle::kernels {

/// Compute backend. `Serial` is the plain reference implementation kept for
/// testing; `Parallel` is the OpenMP production path. Both orders every
/// per-element accumulation identically, so results do not depend on the
/// number of threads.
enum class Backend { Serial, Parallel };

void set_backend(Backend b);
Backend backend();

int conv_out_size(int in, int kernel, int stride, int pad);

// x: (N,Ci,H,W)  w: (Co,Ci,K,K)  b: Co  y: (N,Co,Ho,Wo)
// Backward-param kernels accumulate (+=) into dw/db; backward-input overwrites dx.

namespace serial {
void conv2d_forward(const Tensor4& x, const Tensor4& w, const std::vector<float>& b, int stride,
                    int pad, Tensor4& y);
void conv2d_backward_input(const Tensor4& dy, const Tensor4& w, int stride, int pad, Tensor4& dx);
void conv2d_backward_params(const Tensor4& dy, const Tensor4& x, int stride, int pad, Tensor4& dw,
                            std::vector<float>& db);
void instance_norm_forward(const Tensor4& x, const std::vector<float>& gamma,
                           const std::vector<float>& beta, float eps, Tensor4& y, Tensor4& xhat,
                           std::vector<float>& inv_std);
void instance_norm_backward(const Tensor4& dy, const Tensor4& xhat,
                            const std::vector<float>& inv_std, const std::vector<float>& gamma,
                            Tensor4& dx, std::vector<float>& dgamma, std::vector<float>& dbeta);
void leaky_relu_forward(const Tensor4& x, float slope, Tensor4& y);
void leaky_relu_backward(const Tensor4& dy, const Tensor4& x, float slope, Tensor4& dx);
void tanh_forward(const Tensor4& x, Tensor4& y);
void tanh_backward(const Tensor4& dy, const Tensor4& y, Tensor4& dx);
void upsample2x_forward(const Tensor4& x, Tensor4& y);
void upsample2x_backward(const Tensor4& dy, Tensor4& dx);
void add(const Tensor4& a, const Tensor4& b, Tensor4& out);
}  // namespace serial

namespace par {
void conv2d_forward(const Tensor4& x, const Tensor4& w, const std::vector<float>& b, int stride,
                    int pad, Tensor4& y);
void conv2d_backward_input(const Tensor4& dy, const Tensor4& w, int stride, int pad, Tensor4& dx);
void conv2d_backward_params(const Tensor4& dy, const Tensor4& x, int stride, int pad, Tensor4& dw,
                            std::vector<float>& db);
void instance_norm_forward(const Tensor4& x, const std::vector<float>& gamma,
                           const std::vector<float>& beta, float eps, Tensor4& y, Tensor4& xhat,
                           std::vector<float>& inv_std);
void instance_norm_backward(const Tensor4& dy, const Tensor4& xhat,
                            const std::vector<float>& inv_std, const std::vector<float>& gamma,
                            Tensor4& dx, std::vector<float>& dgamma, std::vector<float>& dbeta);
void leaky_relu_forward(const Tensor4& x, float slope, Tensor4& y);
void leaky_relu_backward(const Tensor4& dy, const Tensor4& x, float slope, Tensor4& dx);
void tanh_forward(const Tensor4& x, Tensor4& y);
void tanh_backward(const Tensor4& dy, const Tensor4& y, Tensor4& dx);
void upsample2x_forward(const Tensor4& x, Tensor4& y);
void upsample2x_backward(const Tensor4& dy, Tensor4& dx);
void add(const Tensor4& a, const Tensor4& b, Tensor4& out);
}  // namespace par

// Dispatch on the active backend.
void conv2d_forward(const Tensor4& x, const Tensor4& w, const std::vector<float>& b, int stride,
                    int pad, Tensor4& y);
void conv2d_backward_input(const Tensor4& dy, const Tensor4& w, int stride, int pad, Tensor4& dx);
void conv2d_backward_params(const Tensor4& dy, const Tensor4& x, int stride, int pad, Tensor4& dw,
                            std::vector<float>& db);
void instance_norm_forward(const Tensor4& x, const std::vector<float>& gamma,
                           const std::vector<float>& beta, float eps, Tensor4& y, Tensor4& xhat,
                           std::vector<float>& inv_std);
void instance_norm_backward(const Tensor4& dy, const Tensor4& xhat,
                            const std::vector<float>& inv_std, const std::vector<float>& gamma,
                            Tensor4& dx, std::vector<float>& dgamma, std::vector<float>& dbeta);
void leaky_relu_forward(const Tensor4& x, float slope, Tensor4& y);
void leaky_relu_backward(const Tensor4& dy, const Tensor4& x, float slope, Tensor4& dx);
void tanh_forward(const Tensor4& x, Tensor4& y);
void tanh_backward(const Tensor4& dy, const Tensor4& y, Tensor4& dx);
void upsample2x_forward(const Tensor4& x, Tensor4& y);
void upsample2x_backward(const Tensor4& dy, Tensor4& dx);
void add(const Tensor4& a, const Tensor4& b, Tensor4& out);

}  // namespace facecycle::kernels
