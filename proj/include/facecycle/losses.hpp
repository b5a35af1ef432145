#pragma once

#include <functional>
#include <string>

#include "facecycle/layers.hpp"
#include "facecycle/tensor.hpp"

namespace facecycle::losses {

struct LossWeights {
  double alpha = 1.0;   // weight of the X->Y adversarial loss
  double beta = 1.0;    // weight of the Y->X adversarial loss
  double lambda = 10.0; // shared cycle weight
  double gamma = 0.5;   // dual-discriminator blend, in [0, 1]
  double real_label = 1.0;
  double fake_label = 0.0;
  double gen_target = 1.0;

  void validate() const;
};

enum class CycleNorm { L1, L2 };

struct LossReport {
  long long step = 0;
  double adv_g = 0, adv_f = 0;
  double d_y1 = 0, d_y2 = 0, d_x1 = 0, d_x2 = 0;
  double cyc_g = 0, cyc_f = 0;
  double total_g = 0, total_f = 0;
};

/// `step=<n> adv_G=<v> ... total_F=<v>`, 6 significant digits.
std::string format_loss_line(const LossReport& r);

using ForwardFn = std::function<Tensor4(const Tensor4&)>;

/// Mean over all batch and spatial entries of a patch score map.
double patch_average(const Tensor4& score_map);

// --- value-level losses (any forward maps; tests use identity lambdas) ---

double lsgan_d_loss(const ForwardFn& d, const Tensor4& real, const Tensor4& fake,
                    const LossWeights& w);
double lsgan_g_loss(const ForwardFn& d, const Tensor4& fake, const LossWeights& w);
double cycle_loss_g(const ForwardFn& g, const ForwardFn& f, const Tensor4& x,
                    CycleNorm norm = CycleNorm::L1);
double cycle_loss_f(const ForwardFn& g, const ForwardFn& f, const Tensor4& y,
                    CycleNorm norm = CycleNorm::L1);
/// Original joint form: gradients, where taken, flow into both mappings.
/// Reference/ablation semantics only; the per-generator forms drive training.
double cycle_loss_joint(const ForwardFn& g, const ForwardFn& f, const Tensor4& x, const Tensor4& y,
                        CycleNorm norm = CycleNorm::L1);
double blended_adv_loss(const ForwardFn& d1, const ForwardFn& d2, const Tensor4& fake,
                        const LossWeights& w);

/// Assembles total_g / total_f from the partial entries of `r` per the
/// weighted objective: total_side = weight * adv_side + lambda * cyc_side.
/// Throws "non-finite loss at step <n>" when any component is not finite.
void full_objective(LossReport& r, const LossWeights& w);

// --- gradient-level losses on concrete networks ---
// These encode the training-time gradient-flow restrictions: the fake input
// to the discriminator loss is severed, generator-side losses leave
// discriminator parameters untouched, and the per-generator cycle loss treats
// the second (wrapping) generator as a constant function.

/// Discriminator objective: mean (D(real)-a)^2 + mean (D(fake)-fake_label)^2,
/// scaled by `scale`. Accumulates D's parameter gradients; returns the
/// unscaled value.
double lsgan_d_grad(nn::Sequential& d, const Tensor4& real, const Tensor4& fake,
                    const LossWeights& w, double scale = 1.0);

/// Generator adversarial objective mean (D(fake)-gen_target)^2. Adds
/// scale * dLoss/dfake into dfake_accum; D's parameters receive no gradient.
double lsgan_g_grad(nn::Sequential& d, const Tensor4& fake, const LossWeights& w,
                    Tensor4& dfake_accum, double scale = 1.0);

/// Reconstruction term mean |wrap(fake) - ref| (or squared error for L2).
/// Adds scale * dLoss/dfake into dfake_accum by backpropagating through
/// `wrap` in input-only mode: wrap's parameter gradients stay untouched.
double cycle_recon_grad(nn::Sequential& wrap, const Tensor4& fake, const Tensor4& ref,
                        CycleNorm norm, Tensor4& dfake_accum, double scale = 1.0);

// Shared scalar helpers (double accumulation).
double mean_sq_to_target(const Tensor4& s, double target);
Tensor4 mean_sq_to_target_grad(const Tensor4& s, double target, double scale);
double mean_abs_diff(const Tensor4& a, const Tensor4& b);
double mean_sq_diff(const Tensor4& a, const Tensor4& b);

}  // namespace facecycle::losses
