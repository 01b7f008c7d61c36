#include "dsbr/diffusion.hpp"

#include <cmath>

#include "dsbr/encoder.hpp"

namespace dsbr {

NoiseSchedule linear_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1) throw std::invalid_argument("linear_schedule: steps must be positive");
  if (!(beta_min > 0.0) || beta_min > beta_max || !(beta_max < 1.0))
    throw std::invalid_argument("linear_schedule: need 0 < beta_min <= beta_max < 1");
  NoiseSchedule ns;
  ns.steps = steps;
  ns.beta.resize(static_cast<std::size_t>(steps));
  ns.alpha.resize(static_cast<std::size_t>(steps));
  ns.alpha_bar.resize(static_cast<std::size_t>(steps));
  double running = 1.0;
  for (int t = 1; t <= steps; ++t) {
    double frac = steps == 1 ? 0.0
                             : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    double b = beta_min + (beta_max - beta_min) * frac;
    ns.beta[static_cast<std::size_t>(t - 1)] = b;
    ns.alpha[static_cast<std::size_t>(t - 1)] = 1.0 - b;
    running *= 1.0 - b;
    ns.alpha_bar[static_cast<std::size_t>(t - 1)] = running;
  }
  return ns;
}

Tensor q_sample(const Tensor& x0, const std::vector<int>& ts, const Tensor& eps,
                const NoiseSchedule& ns) {
  if (ts.size() != x0.rows()) throw std::invalid_argument("q_sample: one timestep per row");
  if (eps.rows() != x0.rows() || eps.cols() != x0.cols())
    throw std::invalid_argument("q_sample: eps shape mismatch");
  std::vector<double> ca(x0.rows()), cb(x0.rows());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < 1 || ts[i] > ns.steps)
      throw std::invalid_argument("q_sample: timestep out of range");
    double ab = ns.abar(ts[i]);
    ca[i] = std::sqrt(ab);
    cb[i] = std::sqrt(1.0 - ab);
  }
  Tensor ca_col = Tensor::of(x0.rows(), 1, std::move(ca));
  Tensor cb_col = Tensor::of(x0.rows(), 1, std::move(cb));
  return add(mul(x0, ca_col), mul(eps, cb_col));
}

namespace {

// Interleaved sin/cos rows, geometric frequency ladder, one row per step.
Tensor timestep_table(int steps, int d) {
  std::size_t dd = static_cast<std::size_t>(d);
  int half = (d + 1) / 2;
  Tensor table = Tensor::zeros(static_cast<std::size_t>(steps), dd);
  for (int t = 1; t <= steps; ++t) {
    double* row = table.values().data() + static_cast<std::size_t>(t - 1) * dd;
    for (int i = 0; i < half; ++i) {
      double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                             static_cast<double>(half));
      double angle = static_cast<double>(t) * freq;
      row[2 * i] = std::sin(angle);
      if (2 * i + 1 < d) row[2 * i + 1] = std::cos(angle);
    }
  }
  return table;
}

}  // namespace

Denoiser make_denoiser(int d, const NoiseSchedule& ns, Rng& rng) {
  if (d < 1) throw std::invalid_argument("make_denoiser: d must be positive");
  Denoiser net;
  net.dim = d;
  std::size_t dd = static_cast<std::size_t>(d);
  net.w_in = init_uniform(3 * dd, 2 * dd, rng);
  net.b_in = Tensor::zeros(1, 2 * dd, true);
  net.w_out = init_uniform(2 * dd, dd, rng);
  net.b_out = Tensor::zeros(1, dd, true);
  net.timestep_emb = timestep_table(ns.steps, d);
  return net;
}

Tensor denoise(const Denoiser& net, const Tensor& x_t, const Tensor& cond,
               const std::vector<int>& ts) {
  std::size_t dd = static_cast<std::size_t>(net.dim);
  if (x_t.cols() != dd || cond.cols() != dd || cond.rows() != x_t.rows())
    throw std::invalid_argument("denoise: shape mismatch");
  if (ts.size() != x_t.rows()) throw std::invalid_argument("denoise: one timestep per row");
  std::vector<int> rows(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) rows[i] = ts[i] - 1;
  Tensor temb = gather_rows(net.timestep_emb, rows);
  Tensor input = concat_cols(concat_cols(x_t, cond), temb);
  Tensor h = silu(add(matmul(input, net.w_in), net.b_in));
  return add(matmul(h, net.w_out), net.b_out);
}

DenoiseLossResult denoise_loss(const Denoiser& net, const Tensor& x0_target, const Tensor& cond,
                               const std::vector<int>& ts, const Tensor& eps,
                               const NoiseSchedule& ns) {
  DenoiseLossResult r;
  r.x_noised = q_sample(x0_target, ts, eps, ns);
  r.prediction = denoise(net, r.x_noised, cond, ts);
  r.loss = mse(r.prediction, x0_target);
  return r;
}

}  // namespace dsbr
