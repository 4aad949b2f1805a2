#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace mlnd {

// Independent random stream keyed by (master seed, stream index, domain).
//
// Each stream owns its own engine whose state is derived from the key only,
// so stream j produces the same numbers whether it is consumed first, last
// or on another thread.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index, std::uint32_t domain = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      domain};
    engine_.seed(seq);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1).
  double uniform_open() noexcept {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  std::uint64_t bits() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Poisson variate with the given mean.
//
// Means below 10 use inversion by sequential search of the CDF; larger means
// use Hormann's transformed rejection with squeeze (PTRS). Both sample the
// exact distribution.
inline std::int64_t poisson(Stream& rng, double mean) {
  if (!(mean > 0.0)) return 0;

  if (mean < 10.0) {
    double u = rng.uniform();
    std::int64_t x = 0;
    double prob = std::exp(-mean);
    double cdf = prob;
    // Sequential search; the cap guards against u rounding above the
    // numerically attainable CDF.
    while (u > cdf && x < 1000) {
      ++x;
      prob *= mean / static_cast<double>(x);
      cdf += prob;
    }
    return x;
  }

  const double log_mean = std::log(mean);
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);

  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (kf > static_cast<double>(std::numeric_limits<std::int64_t>::max() / 2)) continue;
    const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = -mean + kf * log_mean - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return static_cast<std::int64_t>(kf);
  }
}

}  // namespace mlnd
