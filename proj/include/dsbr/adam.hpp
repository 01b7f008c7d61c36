#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsbr/tensor.hpp"

namespace dsbr {

// Adam with bias correction. First/second moment state is keyed by parameter
// name and sized lazily on first step. Stepping a parameter whose gradient
// buffer was never populated is an error; a populated all-zero gradient is a
// legitimate zero step.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update to every param, then zeroes their gradients.
  void step(std::vector<Param>& params, double lr);

  void reset() { state_.clear(); }

 private:
  struct Moments {
    std::vector<double> m, v;
    std::int64_t t = 0;
  };
  double beta1_, beta2_, eps_;
  std::unordered_map<std::string, Moments> state_;
};

}  // namespace dsbr
