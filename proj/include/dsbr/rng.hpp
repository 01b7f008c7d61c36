#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dsbr {

// Deterministic random source. Every random choice in a run flows from one
// root seed; independent components draw from named substreams so adding a
// consumer in one place cannot shift the stream seen by another.
//
// uniform() and gaussian() are implemented on top of the raw mt19937_64
// output instead of <random> distributions, whose results differ between
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Substream for `name`, derived from the root seed. Same (seed, name)
  // always yields the same stream.
  static Rng substream(std::uint64_t root_seed, std::string_view name);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Box-Muller. Caches the second value of each pair.
  double gaussian();

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Integer in [lo, hi] inclusive.
  int range(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n) excluding `exclude` (pass a negative to
  // exclude nothing). Returned in draw order. Requires k <= usable pool.
  std::vector<int> sample_without_replacement(int n, int k, int exclude = -1);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dsbr
