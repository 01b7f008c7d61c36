#include "dsbr/pca.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dsbr/rng.hpp"

namespace dsbr {

namespace {

constexpr double kTol = 1e-9;
constexpr int kMaxIters = 1000;

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> pca_reduce(const std::vector<double>& x, std::size_t n, std::size_t d,
                               std::size_t k, std::uint64_t seed) {
  if (x.size() != n * d) throw std::invalid_argument("pca_reduce: data size mismatch");
  if (k == 0 || k > d || k > n)
    throw std::invalid_argument("pca_reduce: k must be in [1, min(n, d)]");
  if (n < 2) throw std::invalid_argument("pca_reduce: need at least 2 rows");

  std::vector<double> xc(x);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xc[i * d + j];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) xc[i * d + j] -= mean;
  }
  const double total_fro = norm(xc);

  Rng rng = Rng::substream(seed, "pca");
  std::vector<std::vector<double>> components;
  components.reserve(k);
  std::vector<double> xv(n), v(d), next(d);

  for (std::size_t c = 0; c < k; ++c) {
    if (norm(xc) <= 1e-12 * (total_fro > 0.0 ? total_fro : 1.0))
      throw std::invalid_argument("pca_reduce: requested " + std::to_string(k) +
                                  " components but data rank is " + std::to_string(c));
    for (std::size_t j = 0; j < d; ++j) v[j] = rng.gaussian();
    for (int iter = 0; iter < kMaxIters; ++iter) {
      // next = Xc^T (Xc v), the covariance apply without forming d x d.
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = xc.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) s += row[j] * v[j];
        xv[i] = s;
      }
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = xc.data() + i * d;
        const double s = xv[i];
        for (std::size_t j = 0; j < d; ++j) next[j] += s * row[j];
      }
      for (const auto& u : components) {
        double proj = 0.0;
        for (std::size_t j = 0; j < d; ++j) proj += next[j] * u[j];
        for (std::size_t j = 0; j < d; ++j) next[j] -= proj * u[j];
      }
      double r = norm(next);
      if (r == 0.0) break;  // degenerate direction, keep previous v
      for (std::size_t j = 0; j < d; ++j) next[j] /= r;
      double align = 0.0;
      for (std::size_t j = 0; j < d; ++j) align += next[j] * v[j];
      if (align < 0.0)
        for (std::size_t j = 0; j < d; ++j) next[j] = -next[j];
      double delta = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double dj = next[j] - v[j];
        delta += dj * dj;
      }
      v = next;
      if (std::sqrt(delta) < kTol) break;
    }
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::fabs(v[j]) > std::fabs(v[argmax])) argmax = j;
    if (v[argmax] < 0.0)
      for (std::size_t j = 0; j < d; ++j) v[j] = -v[j];
    components.push_back(v);
    // Deflate so the next component is extracted from the residual.
    for (std::size_t i = 0; i < n; ++i) {
      double* row = xc.data() + i * d;
      double proj = 0.0;
      for (std::size_t j = 0; j < d; ++j) proj += row[j] * v[j];
      for (std::size_t j = 0; j < d; ++j) row[j] -= proj * v[j];
    }
  }

  // Scores of the centered originals on the components. xc is deflated, so
  // rebuild the centered matrix once.
  std::vector<double> centered(x);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += centered[i * d + j];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered[i * d + j] -= mean;
  }
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      const double* row = centered.data() + i * d;
      const double* u = components[c].data();
      for (std::size_t j = 0; j < d; ++j) s += row[j] * u[j];
      out[i * k + c] = s;
    }
  return out;
}

}  // namespace dsbr
