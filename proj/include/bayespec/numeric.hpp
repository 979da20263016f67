#pragma once

#include <math.h>  // lgamma_r

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

namespace bayespec {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// ln Γ(x) for x > 0. Uses the reentrant variant so concurrent replicas
/// do not race on the global `signgam`.
[[nodiscard]] inline double log_gamma(double x) noexcept {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

/// ln(y!) for integer y >= 0.
[[nodiscard]] inline double log_factorial(std::int64_t y) noexcept {
  return y < 2 ? 0.0 : log_gamma(static_cast<double>(y) + 1.0);
}

/// ψ'(x), the trigamma function, for x > 0.
[[nodiscard]] inline double trigamma(double x) noexcept {
  double acc = 0.0;
  while (x < 10.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double r = 1.0 / x;
  const double r2 = r * r;
  // Asymptotic series 1/x + 1/2x^2 + Σ B_2k / x^(2k+1)
  const double series =
      r + 0.5 * r2 +
      r * r2 *
          (1.0 / 6.0 +
           r2 * (-1.0 / 30.0 + r2 * (1.0 / 42.0 + r2 * (-1.0 / 30.0 + r2 * (5.0 / 66.0 + r2 * (-691.0 / 2730.0))))));
  return acc + series;
}

/// log Σ exp(v_i), computed with max subtraction. Empty input yields -inf.
[[nodiscard]] inline double log_sum_exp(std::span<const double> v) noexcept {
  if (v.empty()) return -kInf;
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace bayespec
