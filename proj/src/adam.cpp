#include "dsbr/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace dsbr {

void AdamOptimizer::step(std::vector<Param>& params, double lr) {
  for (auto& p : params) {
    if (!p.tensor.defined() || !p.tensor.has_grad())
      throw std::runtime_error("AdamOptimizer::step: parameter '" + p.name +
                               "' has no gradient");
    auto& mom = state_[p.name];
    std::size_t n = p.tensor.size();
    if (mom.m.size() != n) {
      mom.m.assign(n, 0.0);
      mom.v.assign(n, 0.0);
      mom.t = 0;
    }
    mom.t += 1;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(mom.t));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(mom.t));
    const std::vector<double>& g = p.tensor.grad();
    std::vector<double>& w = p.tensor.values();
    for (std::size_t i = 0; i < n; ++i) {
      mom.m[i] = beta1_ * mom.m[i] + (1.0 - beta1_) * g[i];
      mom.v[i] = beta2_ * mom.v[i] + (1.0 - beta2_) * g[i] * g[i];
      double mhat = mom.m[i] / bc1;
      double vhat = mom.v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
    p.tensor.zero_grad();
  }
}

}  // namespace dsbr
