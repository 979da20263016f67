#pragma once

// Poisson measurement model.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bayespec/model.hpp"
#include "bayespec/numeric.hpp"
#include "bayespec/priors.hpp"

namespace bayespec {

/// Observed data set: integer counts on an energy grid.
struct Spectrum {
  Grid grid;
  std::vector<std::int64_t> counts;

  Spectrum() = default;
  Spectrum(Grid g, std::vector<std::int64_t> y) : grid(std::move(g)), counts(std::move(y)) {
    if (counts.size() != grid.size())
      throw std::invalid_argument("Spectrum: counts and grid differ in length");
    for (std::int64_t c : counts)
      if (c < 0) throw std::invalid_argument("Spectrum: counts must be nonnegative");
  }

  [[nodiscard]] std::size_t size() const noexcept { return counts.size(); }

  /// Σ ln(y_i!), the data-only part of the Poisson normalizer.
  [[nodiscard]] double log_factorial_sum() const noexcept {
    double s = 0.0;
    for (std::int64_t y : counts) s += log_factorial(y);
    return s;
  }

  friend bool operator==(const Spectrum&, const Spectrum&) = default;
};

/// ln p(y | rate) = y ln(rate) - rate - ln(y!)
[[nodiscard]] inline double poisson_log_pmf(std::int64_t y, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw std::domain_error("poisson_log_pmf: rate must be finite and > 0");
  if (y < 0) throw std::domain_error("poisson_log_pmf: count must be >= 0");
  if (y == 0) return -rate;
  return static_cast<double>(y) * std::log(rate) - rate - log_factorial(y);
}

namespace detail {

/// n·E for a precomputed rate vector: Σ f_i - y_i ln f_i + ln(y_i!).
/// +inf if any rate is not strictly positive.
[[nodiscard]] inline double total_loss(std::span<const double> rate,
                                       std::span<const std::int64_t> counts,
                                       double log_factorial_sum) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < rate.size(); ++i) {
    const double f = rate[i];
    if (!(f > 0.0) || !std::isfinite(f)) return kInf;
    s += counts[i] == 0 ? f : f - static_cast<double>(counts[i]) * std::log(f);
  }
  return s + log_factorial_sum;
}

}  // namespace detail

/// Mean negative log-likelihood per data point,
/// E = (1/n) Σ { f(x_i) - y_i ln f(x_i) + ln(y_i!) }, so exp(-nE) = p(D | θ, K).
/// Returns +inf when the model is not strictly positive on the grid.
[[nodiscard]] inline double loss_E(const Spectrum& spectrum, const Theta& theta,
                                   const ModelSpec& spec) {
  const std::vector<double> f = eval_model(spectrum.grid, theta, spec);
  const double total = detail::total_loss(f, spectrum.counts, spectrum.log_factorial_sum());
  return total / static_cast<double>(spectrum.size());
}

/// n β E(θ) - ln p(θ | K). A non-positive model rate is outside the support at
/// every temperature, so +inf is returned even for β = 0.
[[nodiscard]] inline double tempered_neg_log_target(const Spectrum& spectrum, const Theta& theta,
                                                    const ModelSpec& spec, double beta,
                                                    const PriorHyper& prior) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("tempered_neg_log_target: beta must lie in [0, 1]");
  const double lp = log_prior_density(theta, spec.K, prior);
  if (!std::isfinite(lp)) return kInf;
  const double e = loss_E(spectrum, theta, spec);
  if (!std::isfinite(e)) return kInf;
  const double n = static_cast<double>(spectrum.size());
  return (beta == 0.0 ? 0.0 : n * beta * e) - lp;
}

}  // namespace bayespec
