#include "facecycle/losses.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace facecycle::losses {

void LossWeights::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (alpha < 0.0 || beta < 0.0 || lambda < 0.0)
    throw std::invalid_argument("alpha, beta, lambda must be >= 0");
}

std::string format_loss_line(const LossReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "step=%lld adv_G=%.6g adv_F=%.6g dY1=%.6g dY2=%.6g dX1=%.6g dX2=%.6g "
                "cyc_G=%.6g cyc_F=%.6g total_G=%.6g total_F=%.6g",
                r.step, r.adv_g, r.adv_f, r.d_y1, r.d_y2, r.d_x1, r.d_x2, r.cyc_g, r.cyc_f,
                r.total_g, r.total_f);
  return buf;
}

double patch_average(const Tensor4& score_map) {
  if (score_map.size() == 0) throw std::invalid_argument("patch_average: empty map");
  double acc = 0.0;
  for (size_t i = 0; i < score_map.size(); ++i) acc += score_map[i];
  return acc / static_cast<double>(score_map.size());
}

double mean_sq_to_target(const Tensor4& s, double target) {
  if (s.size() == 0) throw std::invalid_argument("empty score map");
  double acc = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    double d = s[i] - target;
    acc += d * d;
  }
  return acc / static_cast<double>(s.size());
}

Tensor4 mean_sq_to_target_grad(const Tensor4& s, double target, double scale) {
  Tensor4 g = Tensor4::zeros_like(s);
  const double k = 2.0 * scale / static_cast<double>(s.size());
  for (size_t i = 0; i < s.size(); ++i) g[i] = static_cast<float>(k * (s[i] - target));
  return g;
}

double mean_abs_diff(const Tensor4& a, const Tensor4& b) {
  check_same_shape(a, b, "mean_abs_diff");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a[i]) - b[i]);
  return acc / static_cast<double>(a.size());
}

double mean_sq_diff(const Tensor4& a, const Tensor4& b) {
  check_same_shape(a, b, "mean_sq_diff");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double lsgan_d_loss(const ForwardFn& d, const Tensor4& real, const Tensor4& fake,
                    const LossWeights& w) {
  check_same_shape(real, fake, "lsgan_d_loss");
  double real_term = mean_sq_to_target(d(real), w.real_label);
  double fake_term = mean_sq_to_target(d(fake), w.fake_label);
  return real_term + fake_term;
}

double lsgan_g_loss(const ForwardFn& d, const Tensor4& fake, const LossWeights& w) {
  return mean_sq_to_target(d(fake), w.gen_target);
}

namespace {
double recon_value(const Tensor4& recon, const Tensor4& ref, CycleNorm norm) {
  return norm == CycleNorm::L1 ? mean_abs_diff(recon, ref) : mean_sq_diff(recon, ref);
}
}  // namespace

double cycle_loss_g(const ForwardFn& g, const ForwardFn& f, const Tensor4& x, CycleNorm norm) {
  return recon_value(f(g(x)), x, norm);
}

double cycle_loss_f(const ForwardFn& g, const ForwardFn& f, const Tensor4& y, CycleNorm norm) {
  return recon_value(g(f(y)), y, norm);
}

double cycle_loss_joint(const ForwardFn& g, const ForwardFn& f, const Tensor4& x, const Tensor4& y,
                        CycleNorm norm) {
  return cycle_loss_g(g, f, x, norm) + cycle_loss_f(g, f, y, norm);
}

double blended_adv_loss(const ForwardFn& d1, const ForwardFn& d2, const Tensor4& fake,
                        const LossWeights& w) {
  return w.gamma * lsgan_g_loss(d1, fake, w) + (1.0 - w.gamma) * lsgan_g_loss(d2, fake, w);
}

void full_objective(LossReport& r, const LossWeights& w) {
  r.total_g = w.alpha * r.adv_g + w.lambda * r.cyc_g;
  r.total_f = w.beta * r.adv_f + w.lambda * r.cyc_f;
  for (double v : {r.adv_g, r.adv_f, r.d_y1, r.d_y2, r.d_x1, r.d_x2, r.cyc_g, r.cyc_f, r.total_g,
                   r.total_f})
    if (!std::isfinite(v))
      throw std::runtime_error("non-finite loss at step " + std::to_string(r.step));
}

double lsgan_d_grad(nn::Sequential& d, const Tensor4& real, const Tensor4& fake,
                    const LossWeights& w, double scale) {
  check_same_shape(real, fake, "lsgan_d_grad");
  nn::Tape tape;
  Tensor4 s_real = d.forward(real, tape);
  double value = mean_sq_to_target(s_real, w.real_label);
  d.backward(mean_sq_to_target_grad(s_real, w.real_label, scale), tape, /*acc_params=*/true);

  Tensor4 s_fake = d.forward(fake, tape);
  value += mean_sq_to_target(s_fake, w.fake_label);
  d.backward(mean_sq_to_target_grad(s_fake, w.fake_label, scale), tape, /*acc_params=*/true);
  return value;
}

double lsgan_g_grad(nn::Sequential& d, const Tensor4& fake, const LossWeights& w,
                    Tensor4& dfake_accum, double scale) {
  nn::Tape tape;
  Tensor4 s = d.forward(fake, tape);
  double value = mean_sq_to_target(s, w.gen_target);
  Tensor4 dfake =
      d.backward(mean_sq_to_target_grad(s, w.gen_target, scale), tape, /*acc_params=*/false);
  check_same_shape(dfake_accum, dfake, "lsgan_g_grad");
  for (size_t i = 0; i < dfake.size(); ++i) dfake_accum[i] += dfake[i];
  return value;
}

double cycle_recon_grad(nn::Sequential& wrap, const Tensor4& fake, const Tensor4& ref,
                        CycleNorm norm, Tensor4& dfake_accum, double scale) {
  nn::Tape tape;
  Tensor4 recon = wrap.forward(fake, tape);
  check_same_shape(recon, ref, "cycle_recon_grad");
  double value = recon_value(recon, ref, norm);

  Tensor4 drecon = Tensor4::zeros_like(recon);
  const double k = scale / static_cast<double>(recon.size());
  if (norm == CycleNorm::L1) {
    for (size_t i = 0; i < recon.size(); ++i) {
      float d = recon[i] - ref[i];
      drecon[i] = static_cast<float>(k * (d > 0.0f ? 1.0 : (d < 0.0f ? -1.0 : 0.0)));
    }
  } else {
    for (size_t i = 0; i < recon.size(); ++i)
      drecon[i] = static_cast<float>(2.0 * k * (recon[i] - ref[i]));
  }
  Tensor4 dfake = wrap.backward(drecon, tape, /*acc_params=*/false);
  check_same_shape(dfake_accum, dfake, "cycle_recon_grad");
  for (size_t i = 0; i < dfake.size(); ++i) dfake_accum[i] += dfake[i];
  return value;
}

}  // namespace facecycle::losses
