#pragma once

#include <stdexcept>
#include <vector>

#include "dsbr/rng.hpp"
#include "dsbr/tensor.hpp"

namespace dsbr {

// Truncated linear corruption schedule. Step t runs 1..steps; index t-1
// into the arrays. abar(0) = 1 by convention (no corruption).
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha

  double abar(int t) const {
    if (t < 0 || t > steps) throw std::invalid_argument("NoiseSchedule::abar: t out of range");
    return t == 0 ? 1.0 : alpha_bar[static_cast<std::size_t>(t - 1)];
  }
  // Posterior-mean coefficients for the deterministic reverse step
  //   x_{t-1} = coef_pred(t) * f(x_t) + coef_prev(t) * x_t.
  // At t = 1 they reduce to (1, 0): the final step returns the prediction.
  double coef_pred(int t) const {
    return std::sqrt(abar(t - 1)) * beta[static_cast<std::size_t>(t - 1)] / (1.0 - abar(t));
  }
  double coef_prev(int t) const {
    return std::sqrt(alpha[static_cast<std::size_t>(t - 1)]) * (1.0 - abar(t - 1)) /
           (1.0 - abar(t));
  }
};

NoiseSchedule linear_schedule(int steps, double beta_min = 1e-4, double beta_max = 1e-1);

// Closed-form forward corruption: per row i with t = ts[i],
//   out = sqrt(abar(t)) * x0 + sqrt(1 - abar(t)) * eps.
// Differentiable in x0; eps is a fixed draw (or zeros in deterministic mode).
Tensor q_sample(const Tensor& x0, const std::vector<int>& ts, const Tensor& eps,
                const NoiseSchedule& ns);

// x0-predicting denoiser: [x_t | condition | timestep-embedding] -> 2d SiLU
// hidden -> d. The sinusoidal timestep table is fixed, one row per step.
struct Denoiser {
  Tensor w_in;   // 3d x 2d
  Tensor b_in;   // 1 x 2d
  Tensor w_out;  // 2d x d
  Tensor b_out;  // 1 x d
  Tensor timestep_emb;  // steps x d, no grad
  int dim = 0;
};

Denoiser make_denoiser(int d, const NoiseSchedule& ns, Rng& rng);

Tensor denoise(const Denoiser& net, const Tensor& x_t, const Tensor& cond,
               const std::vector<int>& ts);

struct DenoiseLossResult {
  Tensor loss;        // scalar MSE against the clean target
  Tensor prediction;  // B x d
  Tensor x_noised;    // B x d
};

DenoiseLossResult denoise_loss(const Denoiser& net, const Tensor& x0_target, const Tensor& cond,
                               const std::vector<int>& ts, const Tensor& eps,
                               const NoiseSchedule& ns);

struct GenResult {
  Tensor x0;                  // generated clean representation
  std::vector<Tensor> steps;  // x_{t_prime} down to x_0 inclusive
};

// Corrupts the start to level t_prime (with eps, or noiselessly when eps is
// null) and walks the deterministic posterior-mean chain back to x_0.
// denoise_fn(x_t, ts) -> prediction; the condition is baked into the
// callable so alternate conditioning schemes share this walker.
template <typename F>
GenResult reverse_generate(F&& denoise_fn, const Tensor& x0_start, const NoiseSchedule& ns,
                           int t_prime, const Tensor* eps) {
  if (t_prime < 1 || t_prime > ns.steps)
    throw std::invalid_argument("reverse_generate: t_prime out of range");
  Tensor noise = eps ? *eps : Tensor::zeros(x0_start.rows(), x0_start.cols());
  GenResult out;
  std::vector<int> ts(x0_start.rows(), t_prime);
  Tensor x = q_sample(x0_start, ts, noise, ns);
  out.steps.push_back(x);
  for (int t = t_prime; t >= 1; --t) {
    std::vector<int> tv(x0_start.rows(), t);
    Tensor f = denoise_fn(x, tv);
    x = add(scale(f, ns.coef_pred(t)), scale(x, ns.coef_prev(t)));
    out.steps.push_back(x);
  }
  out.x0 = x;
  return out;
}

}  // namespace dsbr
