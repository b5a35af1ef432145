#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "facecycle/losses.hpp"
#include "facecycle/netspec.hpp"
#include "doubleref.hpp"
#include "testutil.hpp"

using namespace facecycle;
using namespace facecycle::losses;

namespace {

ForwardFn constant_map(float value, int side = 4) {
  return [value, side](const Tensor4& x) { return Tensor4(x.n(), 1, side, side, value); };
}

const ForwardFn identity = [](const Tensor4& x) { return x; };

netspec::Generator tiny_generator(uint64_t seed, int resolution = 8) {
  netspec::GeneratorSpec spec;
  spec.resolution = resolution;
  spec.base_width = 2;
  spec.downsample_layers = 1;
  spec.residual_blocks = 1;
  Rng rng(seed);
  return netspec::build_generator(spec, rng);
}

netspec::Discriminator tiny_discriminator(uint64_t seed) {
  auto spec = netspec::parse_stack("k3s1p1,k3s1p1");
  spec.base_width = 4;
  Rng rng(seed);
  return netspec::build_discriminator(spec, rng);
}

bool grads_all_zero(std::vector<nn::ParamView> params) {
  for (const auto& p : params)
    for (float g : *p.grad)
      if (g != 0.0f) return false;
  return true;
}

double grad_max_abs(std::vector<nn::ParamView> params) {
  double m = 0.0;
  for (const auto& p : params) m = std::max(m, max_abs(*p.grad));
  return m;
}

}  // namespace

TEST_CASE("patch_average basics") {
  CHECK(patch_average(Tensor4(2, 1, 3, 3, 0.7f)) == doctest::Approx(0.7).epsilon(1e-7));
  Tensor4 m(1, 1, 2, 2);
  m.at(0, 0, 0, 0) = 0.0f;
  m.at(0, 0, 0, 1) = 1.0f;
  m.at(0, 0, 1, 0) = 1.0f;
  m.at(0, 0, 1, 1) = 0.0f;
  CHECK(patch_average(m) == doctest::Approx(0.5));
  CHECK_THROWS_AS(patch_average(Tensor4()), std::invalid_argument);
}

TEST_CASE("patch_average is linear over a concatenated batch") {
  Rng rng(1);
  Tensor4 a = random_tensor(2, 1, 5, 5, rng);
  Tensor4 b = random_tensor(2, 1, 5, 5, rng);
  Tensor4 both(4, 1, 5, 5);
  std::copy(a.vec().begin(), a.vec().end(), both.vec().begin());
  std::copy(b.vec().begin(), b.vec().end(), both.vec().begin() + a.size());
  CHECK(patch_average(both) ==
        doctest::Approx((patch_average(a) + patch_average(b)) / 2.0).epsilon(1e-9));
}

TEST_CASE("patch squared-error mean matches a per-patch loop oracle") {
  Rng rng(2);
  Tensor4 scores = random_tensor(3, 1, 6, 6, rng);
  const double target = 0.8;
  double oracle = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    double per_patch = (scores[i] - target) * (scores[i] - target);
    oracle += per_patch;
  }
  oracle /= static_cast<double>(scores.size());
  CHECK(std::abs(mean_sq_to_target(scores, target) - oracle) < 1e-6);
}

TEST_CASE("lsgan discriminator loss arithmetic") {
  LossWeights w;
  Rng rng(3);
  Tensor4 real = random_tensor(2, 3, 4, 4, rng);
  Tensor4 fake = random_tensor(2, 3, 4, 4, rng);

  // D that scores real at the real label and fake at the fake label is optimal.
  int call = 0;
  ForwardFn d_optimal = [&](const Tensor4& x) {
    return Tensor4(x.n(), 1, 4, 4, call++ == 0 ? 1.0f : 0.0f);
  };
  CHECK(lsgan_d_loss(d_optimal, real, fake, w) == doctest::Approx(0.0));
  CHECK(lsgan_d_loss(constant_map(0.5f), real, fake, w) == doctest::Approx(0.5));
  CHECK(lsgan_d_loss(constant_map(0.0f), real, fake, w) == doctest::Approx(1.0));
}

TEST_CASE("lsgan generator loss arithmetic") {
  LossWeights w;
  Rng rng(4);
  Tensor4 fake = random_tensor(1, 3, 4, 4, rng);
  CHECK(lsgan_g_loss(constant_map(1.0f), fake, w) == doctest::Approx(0.0));
  CHECK(lsgan_g_loss(constant_map(0.0f), fake, w) == doctest::Approx(1.0));
}

TEST_CASE("cycle losses on identity maps vanish") {
  Rng rng(5);
  Tensor4 x = random_tensor(2, 3, 4, 4, rng);
  Tensor4 y = random_tensor(2, 3, 4, 4, rng);
  CHECK(cycle_loss_g(identity, identity, x) == doctest::Approx(0.0));
  CHECK(cycle_loss_f(identity, identity, y) == doctest::Approx(0.0));
  CHECK(cycle_loss_joint(identity, identity, x, y) == doctest::Approx(0.0));
}

TEST_CASE("cycle loss measures the mean absolute deviation") {
  Rng rng(6);
  Tensor4 x = random_tensor(1, 3, 4, 4, rng);
  ForwardFn plus = [](const Tensor4& t) {
    Tensor4 out = t;
    for (auto& v : out.vec()) v += 0.1f;
    return out;
  };
  // F(G(x)) = x + 0.1 elementwise
  CHECK(cycle_loss_g(plus, identity, x) == doctest::Approx(0.1).epsilon(1e-5));
}

TEST_CASE("cycle losses are non-negative and decompose the joint form") {
  auto g = tiny_generator(11);
  auto f = tiny_generator(12);
  ForwardFn gf = [&](const Tensor4& t) { return g.forward(t); };
  ForwardFn ff = [&](const Tensor4& t) { return f.forward(t); };
  Rng rng(7);
  Tensor4 x = random_tensor(1, 3, 8, 8, rng, 0.5f);
  Tensor4 y = random_tensor(1, 3, 8, 8, rng, 0.5f);
  double cg = cycle_loss_g(gf, ff, x);
  double cf = cycle_loss_f(gf, ff, y);
  CHECK(cg >= 0.0);
  CHECK(cf >= 0.0);
  CHECK(cycle_loss_joint(gf, ff, x, y) == doctest::Approx(cg + cf).epsilon(1e-9));
}

TEST_CASE("blended adversarial loss endpoints and affinity in gamma") {
  Rng rng(8);
  Tensor4 fake = random_tensor(1, 3, 4, 4, rng);
  LossWeights w;
  auto d1 = constant_map(0.2f);  // loss (0.2-1)^2 = 0.64
  auto d2 = constant_map(0.4f);  // loss (0.4-1)^2 = 0.36

  w.gamma = 0.0;
  CHECK(blended_adv_loss(d1, d2, fake, w) == doctest::Approx(lsgan_g_loss(d2, fake, w)));
  w.gamma = 1.0;
  CHECK(blended_adv_loss(d1, d2, fake, w) == doctest::Approx(lsgan_g_loss(d1, fake, w)));

  double v0 = lsgan_g_loss(d2, fake, w), v1 = lsgan_g_loss(d1, fake, w);
  for (double gamma : {0.25, 0.5, 0.9}) {
    w.gamma = gamma;
    CHECK(std::abs(blended_adv_loss(d1, d2, fake, w) - (gamma * v1 + (1 - gamma) * v0)) < 1e-6);
  }

  // per-discriminator losses 0.2 and 0.4 blend to 0.3 at gamma 0.5
  auto da = constant_map(1.0f - std::sqrt(0.2f));
  auto db = constant_map(1.0f - std::sqrt(0.4f));
  w.gamma = 0.5;
  CHECK(blended_adv_loss(da, db, fake, w) == doctest::Approx(0.3).epsilon(1e-5));

  // identical discriminators reduce to the single loss for any gamma
  w.gamma = 0.37;
  CHECK(blended_adv_loss(d1, d1, fake, w) == doctest::Approx(lsgan_g_loss(d1, fake, w)));
}

TEST_CASE("full objective arithmetic, reductions and linearity") {
  LossWeights w;
  w.alpha = 1.0;
  w.beta = 1.0;
  w.lambda = 10.0;
  LossReport r;
  r.adv_g = 0.5;
  r.adv_f = 0.5;
  r.cyc_g = 0.1;
  r.cyc_f = 0.2;
  full_objective(r, w);
  CHECK(r.total_g == doctest::Approx(1.5));
  CHECK(r.total_f == doctest::Approx(2.5));
  CHECK(r.total_g + r.total_f == doctest::Approx(4.0));

  LossWeights w0 = w;
  w0.lambda = 0.0;
  LossReport r0 = r;
  full_objective(r0, w0);
  CHECK(r0.total_g == doctest::Approx(w0.alpha * r.adv_g));
  CHECK(r0.total_f == doctest::Approx(w0.beta * r.adv_f));

  LossWeights w2 = w;
  w2.alpha *= 2;
  w2.beta *= 2;
  w2.lambda *= 2;
  LossReport r2 = r;
  full_objective(r2, w2);
  CHECK(r2.total_g + r2.total_f == doctest::Approx(2.0 * (r.total_g + r.total_f)));

  LossReport bad = r;
  bad.step = 17;
  bad.cyc_f = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(full_objective(bad, w), "non-finite loss at step 17", std::runtime_error);
}

TEST_CASE("loss line format uses six significant digits") {
  LossReport r;
  r.step = 3;
  r.adv_g = 0.123456789;
  r.total_f = 1234567.0;
  std::string line = format_loss_line(r);
  CHECK(line.rfind("step=3 adv_G=0.123457 adv_F=0 ", 0) == 0);
  CHECK(line.find("total_F=1.23457e+06") != std::string::npos);
}

TEST_CASE("generator-side losses leave discriminator parameters untouched") {
  auto d = tiny_discriminator(21);
  Rng rng(9);
  Tensor4 fake = random_tensor(1, 3, 8, 8, rng, 0.5f);
  LossWeights w;
  d.net.zero_grads();
  Tensor4 dfake = Tensor4::zeros_like(fake);
  double v = lsgan_g_grad(d.net, fake, w, dfake);
  CHECK(v > 0.0);
  CHECK(grads_all_zero(d.net.params("d")));
  CHECK(max_abs(dfake.vec()) > 0.0);
}

TEST_CASE("per-generator cycle gradient stops at the wrapping generator") {
  auto g = tiny_generator(31);
  auto f = tiny_generator(32);
  Rng rng(10);
  Tensor4 x = random_tensor(1, 3, 8, 8, rng, 0.5f);

  g.net.zero_grads();
  f.net.zero_grads();
  nn::Tape tape_g;
  Tensor4 fake_y = g.net.forward(x, tape_g);
  Tensor4 dfake = Tensor4::zeros_like(fake_y);
  double value = cycle_recon_grad(f.net, fake_y, x, CycleNorm::L1, dfake);
  g.net.backward(dfake, tape_g, /*acc_params=*/true);

  CHECK(value > 0.0);
  CHECK(grads_all_zero(f.net.params("F")));       // exact zeros, not approximately
  CHECK(grad_max_abs(g.net.params("G")) > 0.0);
}

TEST_CASE("discriminator gradients match central finite differences") {
  auto d = tiny_discriminator(41);
  Rng rng(11);
  Tensor4 real = random_tensor(1, 3, 8, 8, rng, 0.5f);
  Tensor4 fake = random_tensor(1, 3, 8, 8, rng, 0.5f);
  LossWeights w;

  d.net.zero_grads();
  double value = lsgan_d_grad(d.net, real, fake, w);
  ForwardFn df = [&](const Tensor4& t) { return d.net.forward(t); };
  CHECK(value == doctest::Approx(lsgan_d_loss(df, real, fake, w)).epsilon(1e-9));

  auto params = d.net.params("d");
  CHECK(gradient_fd_error(params, [&] { return lsgan_d_loss(df, real, fake, w); }, 1e-3f) < 1e-2);
}

TEST_CASE("generator adversarial gradients match finite differences") {
  auto d = tiny_discriminator(51);
  auto g = tiny_generator(52);
  Rng rng(12);
  Tensor4 x = random_tensor(1, 3, 8, 8, rng, 0.5f);
  LossWeights w;

  g.net.zero_grads();
  nn::Tape tape;
  Tensor4 fake = g.net.forward(x, tape);
  Tensor4 dfake = Tensor4::zeros_like(fake);
  lsgan_g_grad(d.net, fake, w, dfake);
  g.net.backward(dfake, tape, /*acc_params=*/true);

  ForwardFn df = [&](const Tensor4& t) { return d.net.forward(t); };
  auto loss_now = [&]() { return lsgan_g_loss(df, g.net.forward(x), w); };

  auto params = g.net.params("G");
  CHECK(gradient_fd_error(params, loss_now, 1e-3f) < 1e-2);
}

TEST_CASE("cycle gradients through the frozen wrapper match finite differences") {
  auto g = tiny_generator(61);
  auto f = tiny_generator(62);
  Rng rng(13);
  Tensor4 x = random_tensor(1, 3, 8, 8, rng, 0.5f);

  for (CycleNorm norm : {CycleNorm::L1, CycleNorm::L2}) {
    CAPTURE(norm == CycleNorm::L1 ? "l1" : "l2");
    g.net.zero_grads();
    nn::Tape tape;
    Tensor4 fake = g.net.forward(x, tape);
    Tensor4 dfake = Tensor4::zeros_like(fake);
    cycle_recon_grad(f.net, fake, x, norm, dfake);
    g.net.backward(dfake, tape, /*acc_params=*/true);

    ForwardFn gf = [&](const Tensor4& t) { return g.net.forward(t); };
    ForwardFn ff = [&](const Tensor4& t) { return f.net.forward(t); };
    auto params = g.net.params("G");
    CHECK(gradient_fd_error(params, [&] { return cycle_loss_g(gf, ff, x, norm); }, 1e-3f) < 1e-2);
  }
}

TEST_CASE("loss gradient scale factors are exact multipliers") {
  // backs the averaged-discriminator-loss mode: scale 0.5 must halve grads
  auto d1 = tiny_discriminator(81);
  auto d2 = tiny_discriminator(81);
  Rng rng(15);
  Tensor4 real = random_tensor(1, 3, 8, 8, rng, 0.5f);
  Tensor4 fake = random_tensor(1, 3, 8, 8, rng, 0.5f);
  LossWeights w;
  d1.net.zero_grads();
  d2.net.zero_grads();
  double v1 = lsgan_d_grad(d1.net, real, fake, w, 1.0);
  double v2 = lsgan_d_grad(d2.net, real, fake, w, 0.5);
  CHECK(v1 == doctest::Approx(v2));  // the returned value stays unscaled
  auto p1 = d1.net.params("d");
  auto p2 = d2.net.params("d");
  double worst = 0.0;
  for (size_t i = 0; i < p1.size(); ++i)
    for (size_t j = 0; j < p1[i].grad->size(); ++j)
      worst = std::max(worst,
                       std::abs(0.5 * (*p1[i].grad)[j] - (*p2[i].grad)[j]));
  CHECK(worst <= 1e-7);
}

TEST_CASE("float gradients match the double-precision reference backward") {
  // Stronger than finite differences: an independent float64 replay of the
  // same forward/backward math, immune to kink and step-size artifacts.
  auto d = tiny_discriminator(71);
  auto g = tiny_generator(72);
  auto f = tiny_generator(73);
  Rng rng(14);
  Tensor4 x = random_tensor(1, 3, 8, 8, rng, 0.5f);
  Tensor4 real = random_tensor(1, 3, 8, 8, rng, 0.5f);
  LossWeights w;

  SUBCASE("lsgan_d_grad") {
    Tensor4 fake = g.net.forward(x);
    d.net.zero_grads();
    lsgan_d_grad(d.net, real, fake, w);

    doubleref::GradMap ref;
    auto real_d = doubleref::DTensor::from(real);
    auto fake_d = doubleref::DTensor::from(fake);
    for (auto [input, target] : {std::pair{&real_d, w.real_label}, {&fake_d, w.fake_label}}) {
      auto score = doubleref::forward(d.net, *input);
      doubleref::DTensor dscore = score;
      for (auto& v : dscore.v) v = 2.0 * (v - target) / static_cast<double>(dscore.v.size());
      doubleref::GradMap part;
      doubleref::backward(d.net, "d", *input, dscore, true, part);
      for (auto& [name, grad] : part) {
        auto& acc = ref[name];
        if (acc.empty()) acc.assign(grad.size(), 0.0);
        for (size_t i = 0; i < grad.size(); ++i) acc[i] += grad[i];
      }
    }
    CHECK(doubleref::worst_grad_error(d.net.params("d"), ref) < 1e-4);
  }

  SUBCASE("lsgan_g_grad chained into the generator") {
    g.net.zero_grads();
    nn::Tape tape;
    Tensor4 fake = g.net.forward(x, tape);
    Tensor4 dfake = Tensor4::zeros_like(fake);
    lsgan_g_grad(d.net, fake, w, dfake);
    g.net.backward(dfake, tape, true);

    auto x_d = doubleref::DTensor::from(x);
    auto fake_d = doubleref::forward(g.net, x_d);
    auto score = doubleref::forward(d.net, fake_d);
    doubleref::DTensor dscore = score;
    for (auto& v : dscore.v) v = 2.0 * (v - w.gen_target) / static_cast<double>(dscore.v.size());
    doubleref::GradMap none;
    auto dfake_d = doubleref::backward(d.net, "d", fake_d, dscore, false, none);
    doubleref::GradMap ref;
    doubleref::backward(g.net, "G", x_d, dfake_d, true, ref);
    CHECK(doubleref::worst_grad_error(g.net.params("G"), ref) < 1e-4);
  }

  SUBCASE("cycle_recon_grad chained into the generator") {
    g.net.zero_grads();
    nn::Tape tape;
    Tensor4 fake = g.net.forward(x, tape);
    Tensor4 dfake = Tensor4::zeros_like(fake);
    cycle_recon_grad(f.net, fake, x, CycleNorm::L1, dfake);
    g.net.backward(dfake, tape, true);

    auto x_d = doubleref::DTensor::from(x);
    auto fake_d = doubleref::forward(g.net, x_d);
    auto recon = doubleref::forward(f.net, fake_d);
    doubleref::DTensor drecon = recon;
    for (size_t i = 0; i < drecon.v.size(); ++i) {
      double r = recon.v[i] - x[i];
      drecon.v[i] = (r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) / static_cast<double>(recon.v.size());
    }
    doubleref::GradMap none;
    auto dfake_d = doubleref::backward(f.net, "F", fake_d, drecon, false, none);
    doubleref::GradMap ref;
    doubleref::backward(g.net, "G", x_d, dfake_d, true, ref);
    CHECK(doubleref::worst_grad_error(g.net.params("G"), ref) < 1e-4);
  }
}

TEST_CASE("weights validate their ranges") {
  LossWeights w;
  w.gamma = 1.2;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w.gamma = 0.5;
  w.lambda = -1.0;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}
