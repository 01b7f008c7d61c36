#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dsbr {

// Projects row-major X (n x d) onto its first k principal components and
// returns the n x k score matrix. Columns are mean-centered; components come
// from power iteration on the covariance (tolerance 1e-9, at most 1000
// iterations each) with deflation and re-orthogonalization against earlier
// components. Each component's sign is fixed so its largest-magnitude
// loading is positive, which makes the output independent of the random
// start vectors up to convergence error.
std::vector<double> pca_reduce(const std::vector<double>& x, std::size_t n, std::size_t d,
                               std::size_t k, std::uint64_t seed);

}  // namespace dsbr
