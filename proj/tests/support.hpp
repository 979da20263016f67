#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bayespec/io.hpp"

namespace testing_support {

using namespace bayespec;

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Standard error of the mean from non-overlapping batch means.
inline double batch_means_se(const std::vector<double>& v, std::size_t batches = 20) {
  const std::size_t len = v.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += v[i];
    means.push_back(s / static_cast<double>(len));
  }
  return std::sqrt(variance_of(means) / static_cast<double>(batches));
}

/// Two states with energies {0, gap} per data point and a uniform prior; the
/// move flips the state. At inverse temperature β the exact stationary
/// probability of state 1 is 1 / (1 + exp(n β gap)).
class TwoStateProblem {
 public:
  using Sample = int;
  struct State {
    int x = 0;
    double loss = 0.0;
    double log_prior = 0.0;
  };

  TwoStateProblem(double n, double gap) : n_(n), gap_(gap) {}

  [[nodiscard]] double data_size() const noexcept { return n_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return 1; }
  [[nodiscard]] CoordinateInfo coordinate(std::size_t) const { return {false, 1.0}; }
  [[nodiscard]] State initial_state(Stream& rng) const {
    const int x = rng.uniform() < 0.5 ? 0 : 1;
    return {x, loss_of(x), 0.0};
  }
  [[nodiscard]] Proposal propose(State& s, std::size_t, double, Stream&) const {
    return {loss_of(1 - s.x), 0.0, 0.0};
  }
  void accept(State& s) const {
    s.x = 1 - s.x;
    s.loss = loss_of(s.x);
  }
  [[nodiscard]] int snapshot(const State& s) const { return s.x; }
  [[nodiscard]] double fresh_loss(const State& s) const { return loss_of(s.x); }
  [[nodiscard]] double fresh_log_prior(const State&) const { return 0.0; }

  [[nodiscard]] double exact_p1(double beta) const { return 1.0 / (1.0 + std::exp(n_ * beta * gap_)); }

 private:
  [[nodiscard]] double loss_of(int x) const noexcept { return x == 0 ? 0.0 : n_ * gap_; }
  double n_;
  double gap_;
};

static_assert(ExchangeProblem<TwoStateProblem>);

/// One-free-parameter evidence problem: a single peak with position, width
/// and background pinned at the truth, amplitude free under its prior.
struct AmplitudeOnly {
  Spectrum spectrum;
  ModelSpec spec{Basis::Gaussian, BackgroundKind::Constant, 1};
  PriorHyper hyper;
  Peak truth;
  double background = 0.0;

  [[nodiscard]] std::vector<std::optional<double>> pins() const {
    return {std::nullopt, truth.position, truth.shape, background};
  }

  /// n E(a): the full Poisson negative log likelihood at amplitude a.
  [[nodiscard]] double loss(double a) const {
    Theta t;
    t.peaks = {Peak{a, truth.position, truth.shape}};
    t.background = ConstantBackground{background};
    return loss_E(spectrum, t, spec) * static_cast<double>(spectrum.size());
  }

  /// -ln ∫ p(a) exp(-n E(a)) da by the trapezoid rule in u = ln a.
  [[nodiscard]] double quadrature_F() const {
    const double lo = std::log(truth.amplitude) - 12.0;
    const double hi = std::log(truth.amplitude) + 6.0;
    constexpr int kPoints = 400001;
    const double h = (hi - lo) / (kPoints - 1);
    std::vector<double> logs(kPoints);
    for (int i = 0; i < kPoints; ++i) {
      const double u = lo + h * i;
      const double a = std::exp(u);
      const double w = (i == 0 || i == kPoints - 1) ? 0.5 : 1.0;
      logs[static_cast<std::size_t>(i)] =
          std::log(w * h) + u + component_log_prior(ParamRole::Amplitude, a, hyper) - loss(a);
    }
    return -log_sum_exp(logs);
  }
};

/// n = 50 points around the strongest synthetic peak.
inline AmplitudeOnly amplitude_only_problem(double T, std::uint64_t seed) {
  AmplitudeOnly p;
  p.hyper = preset(Preset::Synthetic4, T);
  p.truth = Peak{1.522 * T, 161.851, 1.0 / (0.275 * 0.275)};
  p.background = 0.1 * T;
  TrueModel truth;
  truth.T = T;
  truth.spec = p.spec;
  truth.theta.peaks = {p.truth};
  truth.theta.background = ConstantBackground{p.background};
  truth.grid = Grid::uniform(160.87, 162.83, 0.04);
  Stream rng(seed);
  p.spectrum = simulate_spectrum(truth, rng);
  return p;
}

}  // namespace testing_support
