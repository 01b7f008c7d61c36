#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dsbr/diffusion.hpp"
#include "dsbr/encoder.hpp"
#include "dsbr/rng.hpp"
#include "dsbr/tensor.hpp"

using namespace dsbr;

namespace {

Tensor random_mat(std::size_t r, std::size_t c, Rng& rng, bool rg = false) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::of(r, c, std::move(v), rg);
}

double silu_ref(double z) { return z / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("schedule is linear, truncated, monotone, with exact products") {
  NoiseSchedule ns = linear_schedule(32);
  REQUIRE(ns.steps == 32);
  CHECK(ns.beta.front() == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(ns.beta.back() == doctest::Approx(0.1).epsilon(1e-12));
  double running = 1.0;
  for (int t = 1; t <= 32; ++t) {
    std::size_t i = static_cast<std::size_t>(t - 1);
    CHECK(ns.beta[i] > 0.0);
    CHECK(ns.beta[i] <= 0.1);
    if (t > 1) CHECK(ns.beta[i] >= ns.beta[i - 1]);
    CHECK(ns.alpha[i] == 1.0 - ns.beta[i]);
    running *= ns.alpha[i];
    CHECK(ns.abar(t) == doctest::Approx(running).epsilon(1e-12));
    CHECK(ns.abar(t) < ns.abar(t - 1));  // strictly decreasing
  }
  CHECK(ns.abar(0) == 1.0);

  NoiseSchedule one = linear_schedule(1, 0.01, 0.02);
  CHECK(one.abar(1) == doctest::Approx(1.0 - one.beta[0]).epsilon(1e-12));

  CHECK_THROWS_AS(linear_schedule(0), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(8, 0.2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(8, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(8, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("q_sample applies the closed form coefficients") {
  NoiseSchedule ns = linear_schedule(32);
  Rng rng(61);
  Tensor x0 = random_mat(3, 4, rng);
  Tensor zero_eps = Tensor::zeros(3, 4);

  Tensor noiseless = q_sample(x0, {5, 17, 32}, zero_eps, ns);
  for (std::size_t i = 0; i < 3; ++i) {
    int t = i == 0 ? 5 : (i == 1 ? 17 : 32);
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(noiseless.at(i, c) ==
            doctest::Approx(std::sqrt(ns.abar(t)) * x0.at(i, c)).epsilon(1e-12));
  }

  Tensor eps = random_mat(1, 4, rng);
  Tensor xt = q_sample(Tensor::zeros(1, 4), {32}, eps, ns);
  for (std::size_t c = 0; c < 4; ++c)
    CHECK(xt.at(0, c) ==
          doctest::Approx(std::sqrt(1.0 - ns.abar(32)) * eps.at(0, c)).epsilon(1e-12));

  CHECK_THROWS_AS(q_sample(x0, {0, 1, 2}, zero_eps, ns), std::invalid_argument);
  CHECK_THROWS_AS(q_sample(x0, {1, 2, 33}, zero_eps, ns), std::invalid_argument);
}

TEST_CASE("q_sample empirical moments follow the schedule") {
  NoiseSchedule ns = linear_schedule(32);
  Rng rng(62);
  const std::size_t n = 100000;
  const int t = 24;
  const double x0v = 0.7;
  Tensor x0 = Tensor::full(n, 1, x0v);
  std::vector<double> noise(n);
  for (double& v : noise) v = rng.gaussian();
  Tensor eps = Tensor::of(n, 1, std::move(noise));
  Tensor xt = q_sample(x0, std::vector<int>(n, t), eps, ns);

  double mean = 0.0;
  for (double v : xt.values()) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : xt.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);

  double expect_mean = std::sqrt(ns.abar(t)) * x0v;
  double expect_var = 1.0 - ns.abar(t);
  double se_mean = std::sqrt(expect_var / static_cast<double>(n));
  double se_var = expect_var * std::sqrt(2.0 / static_cast<double>(n - 1));
  CHECK(std::fabs(mean - expect_mean) < 3.0 * se_mean);
  CHECK(std::fabs(var - expect_var) < 3.0 * se_var);
}

TEST_CASE("reverse chain coefficients close the loop at t=1") {
  NoiseSchedule ns = linear_schedule(32);
  CHECK(ns.coef_pred(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ns.coef_prev(1) == doctest::Approx(0.0).epsilon(1e-12));
  for (int t = 1; t <= 32; ++t) {
    double pred = std::sqrt(ns.abar(t - 1)) * ns.beta[static_cast<std::size_t>(t - 1)] /
                  (1.0 - ns.abar(t));
    double prev = std::sqrt(ns.alpha[static_cast<std::size_t>(t - 1)]) *
                  (1.0 - ns.abar(t - 1)) / (1.0 - ns.abar(t));
    CHECK(ns.coef_pred(t) == doctest::Approx(pred).epsilon(1e-12));
    CHECK(ns.coef_prev(t) == doctest::Approx(prev).epsilon(1e-12));
  }
}

TEST_CASE("oracle denoiser recovers x0 exactly for every horizon") {
  NoiseSchedule ns = linear_schedule(32);
  Rng rng(63);
  Tensor x0 = random_mat(2, 5, rng);
  Tensor eps = random_mat(2, 5, rng);
  auto oracle = [&](const Tensor&, const std::vector<int>&) { return x0; };

  for (int tp = 1; tp <= 32; ++tp) {
    GenResult gen = reverse_generate(oracle, x0, ns, tp, &eps);
    double err = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      double d = gen.x0.values()[i] - x0.values()[i];
      err += d * d;
    }
    CHECK(std::sqrt(err) <= 1e-9);
    CHECK(gen.steps.size() == static_cast<std::size_t>(tp) + 1);
  }
  CHECK_THROWS_AS(reverse_generate(oracle, x0, ns, 0, &eps), std::invalid_argument);
  CHECK_THROWS_AS(reverse_generate(oracle, x0, ns, 33, &eps), std::invalid_argument);
}

TEST_CASE("zero denoiser with one step returns zero") {
  NoiseSchedule ns = linear_schedule(32);
  Rng rng(64);
  Tensor x0 = random_mat(1, 3, rng);
  auto zero = [&](const Tensor& x, const std::vector<int>&) {
    return Tensor::zeros(x.rows(), x.cols());
  };
  GenResult gen = reverse_generate(zero, x0, ns, 1, nullptr);
  // coef_pred(1) = 1, coef_prev(1) = 0, f = 0.
  for (double v : gen.x0.values()) CHECK(v == 0.0);
}

TEST_CASE("two step chain matches a scalar hand trace") {
  NoiseSchedule ns = linear_schedule(32);
  // Tiny "net": f(x, t) = 0.5 * x + 0.1, elementwise, ignoring t.
  auto tiny = [](const Tensor& x, const std::vector<int>&) {
    return add(scale(x, 0.5), Tensor::full(x.rows(), x.cols(), 0.1));
  };
  double x0v = 0.8, epsv = -0.3;
  Tensor x0 = Tensor::of(1, 1, {x0v});
  Tensor eps = Tensor::of(1, 1, {epsv});
  GenResult gen = reverse_generate(tiny, x0, ns, 2, &eps);

  double x2 = std::sqrt(ns.abar(2)) * x0v + std::sqrt(1.0 - ns.abar(2)) * epsv;
  double f2 = 0.5 * x2 + 0.1;
  double x1 = ns.coef_pred(2) * f2 + ns.coef_prev(2) * x2;
  double f1 = 0.5 * x1 + 0.1;
  double expect = ns.coef_pred(1) * f1 + ns.coef_prev(1) * x1;
  CHECK(gen.x0.item() == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("timestep embedding is sinusoidal and deterministic") {
  NoiseSchedule ns = linear_schedule(8);
  Rng a(65), b(65);
  Denoiser d1 = make_denoiser(4, ns, a);
  Denoiser d2 = make_denoiser(4, ns, b);
  CHECK(d1.timestep_emb.values() == d2.timestep_emb.values());
  CHECK(d1.timestep_emb.rows() == 8);
  CHECK(d1.timestep_emb.cols() == 4);
  CHECK_FALSE(d1.timestep_emb.requires_grad());
  for (double v : d1.timestep_emb.values()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("denoiser forward matches a hand evaluation") {
  NoiseSchedule ns = linear_schedule(4);
  Rng rng(66);
  int d = 2;
  Denoiser net = make_denoiser(d, ns, rng);
  Tensor x = random_mat(1, d, rng);
  Tensor cond = random_mat(1, d, rng);
  int t = 3;
  Tensor out = denoise(net, x, cond, {t});

  std::vector<double> input(3 * static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) {
    input[static_cast<std::size_t>(c)] = x.at(0, static_cast<std::size_t>(c));
    input[static_cast<std::size_t>(d + c)] = cond.at(0, static_cast<std::size_t>(c));
    input[static_cast<std::size_t>(2 * d + c)] =
        net.timestep_emb.at(static_cast<std::size_t>(t - 1), static_cast<std::size_t>(c));
  }
  std::vector<double> hidden(2 * static_cast<std::size_t>(d));
  for (std::size_t h = 0; h < hidden.size(); ++h) {
    double z = net.b_in.at(0, h);
    for (std::size_t i = 0; i < input.size(); ++i) z += input[i] * net.w_in.at(i, h);
    hidden[h] = silu_ref(z);
  }
  for (int c = 0; c < d; ++c) {
    double z = net.b_out.at(0, static_cast<std::size_t>(c));
    for (std::size_t h = 0; h < hidden.size(); ++h)
      z += hidden[h] * net.w_out.at(h, static_cast<std::size_t>(c));
    CHECK(out.at(0, static_cast<std::size_t>(c)) == doctest::Approx(z).epsilon(1e-12));
  }
}

TEST_CASE("denoise_loss is the mean squared recovery error") {
  NoiseSchedule ns = linear_schedule(8);
  Rng rng(67);
  int d = 3;
  Denoiser net = make_denoiser(d, ns, rng);
  Tensor x0 = random_mat(2, d, rng);
  Tensor cond = random_mat(2, d, rng);
  Tensor eps = random_mat(2, d, rng);
  std::vector<int> ts{2, 7};

  DenoiseLossResult res = denoise_loss(net, x0, cond, ts, eps, ns);
  CHECK(res.prediction.rows() == 2);
  CHECK(res.x_noised.rows() == 2);

  Tensor xt = q_sample(x0, ts, eps, ns);
  for (std::size_t i = 0; i < xt.size(); ++i) CHECK(res.x_noised.values()[i] == xt.values()[i]);

  Tensor pred = denoise(net, xt, cond, ts);
  double mse_ref = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double dv = x0.values()[i] - pred.values()[i];
    mse_ref += dv * dv;
  }
  mse_ref /= static_cast<double>(pred.size());
  CHECK(res.loss.item() == doctest::Approx(mse_ref).epsilon(1e-12));

  // Batch order invariance: swapping the two rows leaves the loss unchanged.
  Tensor x0s = Tensor::of(2, d, {x0.at(1, 0), x0.at(1, 1), x0.at(1, 2),
                                 x0.at(0, 0), x0.at(0, 1), x0.at(0, 2)});
  Tensor conds = Tensor::of(2, d, {cond.at(1, 0), cond.at(1, 1), cond.at(1, 2),
                                   cond.at(0, 0), cond.at(0, 1), cond.at(0, 2)});
  Tensor epss = Tensor::of(2, d, {eps.at(1, 0), eps.at(1, 1), eps.at(1, 2),
                                  eps.at(0, 0), eps.at(0, 1), eps.at(0, 2)});
  DenoiseLossResult swapped = denoise_loss(net, x0s, conds, {7, 2}, epss, ns);
  CHECK(swapped.loss.item() == doctest::Approx(res.loss.item()).epsilon(1e-12));
}

TEST_CASE("denoiser gradients pass finite differences") {
  NoiseSchedule ns = linear_schedule(6);
  Rng rng(68);
  int d = 3;
  Denoiser net = make_denoiser(d, ns, rng);
  Tensor x0 = random_mat(2, d, rng);
  Tensor cond = random_mat(2, d, rng, true);
  Tensor eps = random_mat(2, d, rng);
  std::vector<int> ts{1, 5};

  auto loss_fn = [&] { return denoise_loss(net, x0, cond, ts, eps, ns).loss; };
  backward(loss_fn());
  std::vector<Tensor> leaves{net.w_in, net.b_in, net.w_out, net.b_out, cond};
  std::vector<std::vector<double>> analytic;
  for (Tensor& l : leaves) analytic.push_back(l.grad());

  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l)
    for (std::size_t i = 0; i < leaves[l].size(); ++i) {
      double keep = leaves[l].values()[i];
      leaves[l].values()[i] = keep + h;
      double up = loss_fn().item();
      leaves[l].values()[i] = keep - h;
      double down = loss_fn().item();
      leaves[l].values()[i] = keep;
      double fd = (up - down) / (2.0 * h);
      double denom = std::max({std::fabs(fd), std::fabs(analytic[l][i]), 1e-6});
      worst = std::max(worst, std::fabs(fd - analytic[l][i]) / denom);
    }
  CHECK(worst < 1e-4);
}

TEST_CASE("condition weighting matches the scalar oracle") {
  // make_condition semantics: weighted sum of neighbor rows with omega.
  Rng rng(69);
  Tensor nb = random_mat(3, 4, rng);
  Tensor om = Tensor::of(1, 3, {0.2, 0.5, 0.3});
  Tensor cond = matmul(om, nb);
  for (std::size_t c = 0; c < 4; ++c) {
    double expect = 0.2 * nb.at(0, c) + 0.5 * nb.at(1, c) + 0.3 * nb.at(2, c);
    CHECK(cond.at(0, c) == doctest::Approx(expect).epsilon(1e-12));
  }

  // k = 1: condition equals the single neighbor row.
  Tensor one = matmul(Tensor::of(1, 1, {1.0}), random_mat(1, 4, rng));
  CHECK(one.rows() == 1);

  // Uniform omega over identical neighbors returns that row.
  Tensor same = Tensor::of(2, 4, {1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0});
  Tensor uc = matmul(Tensor::of(1, 2, {0.5, 0.5}), same);
  for (std::size_t c = 0; c < 4; ++c)
    CHECK(uc.at(0, c) == doctest::Approx(same.at(0, c)).epsilon(1e-12));
}

TEST_CASE("cross path contrastive loss closed form") {
  double tau = 0.3;
  // B=2, identical positive pairs, orthogonal cross pairs.
  Tensor a = Tensor::of(2, 2, {1.0, 0.0, 0.0, 1.0});
  double expect = -std::log(std::exp(1.0 / tau) / (std::exp(1.0 / tau) + 1.0));
  CHECK(info_nce(a, a, tau).item() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(info_nce(a, a, tau).item() >= 0.0);
}
