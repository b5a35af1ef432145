#include "facecycle/kernels.hpp"

namespace facecycle::kernels {

namespace {
Backend g_backend = Backend::Parallel;
}

void set_backend(Backend b) { g_backend = b; }
Backend backend() { return g_backend; }

#define FC_DISPATCH(fn, ...)                \
  if (g_backend == Backend::Serial) {       \
    serial::fn(__VA_ARGS__);                \
  } else {                                  \
    par::fn(__VA_ARGS__);                   \
  }

void conv2d_forward(const Tensor4& x, const Tensor4& w, const std::vector<float>& b, int stride,
                    int pad, Tensor4& y) {
  FC_DISPATCH(conv2d_forward, x, w, b, stride, pad, y)
}
void conv2d_backward_input(const Tensor4& dy, const Tensor4& w, int stride, int pad, Tensor4& dx) {
  FC_DISPATCH(conv2d_backward_input, dy, w, stride, pad, dx)
}
void conv2d_backward_params(const Tensor4& dy, const Tensor4& x, int stride, int pad, Tensor4& dw,
                            std::vector<float>& db) {
  FC_DISPATCH(conv2d_backward_params, dy, x, stride, pad, dw, db)
}
void instance_norm_forward(const Tensor4& x, const std::vector<float>& gamma,
                           const std::vector<float>& beta, float eps, Tensor4& y, Tensor4& xhat,
                           std::vector<float>& inv_std) {
  FC_DISPATCH(instance_norm_forward, x, gamma, beta, eps, y, xhat, inv_std)
}
void instance_norm_backward(const Tensor4& dy, const Tensor4& xhat,
                            const std::vector<float>& inv_std, const std::vector<float>& gamma,
                            Tensor4& dx, std::vector<float>& dgamma, std::vector<float>& dbeta) {
  FC_DISPATCH(instance_norm_backward, dy, xhat, inv_std, gamma, dx, dgamma, dbeta)
}
void leaky_relu_forward(const Tensor4& x, float slope, Tensor4& y) {
  FC_DISPATCH(leaky_relu_forward, x, slope, y)
}
void leaky_relu_backward(const Tensor4& dy, const Tensor4& x, float slope, Tensor4& dx) {
  FC_DISPATCH(leaky_relu_backward, dy, x, slope, dx)
}
void tanh_forward(const Tensor4& x, Tensor4& y) { FC_DISPATCH(tanh_forward, x, y) }
void tanh_backward(const Tensor4& dy, const Tensor4& y, Tensor4& dx) {
  FC_DISPATCH(tanh_backward, dy, y, dx)
}
void upsample2x_forward(const Tensor4& x, Tensor4& y) { FC_DISPATCH(upsample2x_forward, x, y) }
void upsample2x_backward(const Tensor4& dy, Tensor4& dx) {
  FC_DISPATCH(upsample2x_backward, dy, dx)
}
void add(const Tensor4& a, const Tensor4& b, Tensor4& out) { FC_DISPATCH(add, a, b, out) }

#undef FC_DISPATCH

}  // namespace facecycle::kernels
