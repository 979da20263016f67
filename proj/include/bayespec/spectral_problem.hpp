#pragma once

// The spectral-deconvolution target for the exchange Monte Carlo engine.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bayespec/likelihood.hpp"
#include "bayespec/model.hpp"
#include "bayespec/priors.hpp"
#include "bayespec/sampler.hpp"

namespace bayespec {

/// Coordinate-wise random walk over θ in the flat layout of to_coordinates().
/// Positive coordinates (a, tau, c) move in log space; the state caches each
/// peak's unit basis row (and its running integral for Shirley backgrounds)
/// so a move only recomputes the rows it touches.
class SpectralProblem {
 public:
  using Sample = Theta;

  struct State {
    std::vector<double> coords;
    std::vector<double> components;  // per-coordinate log prior (0 when pinned)
    double loss = kInf;              // n·E
    double log_prior = -kInf;
    std::vector<double> basis;       // K rows of n
    std::vector<double> integral;    // K rows of n, Shirley only
    std::vector<double> rate;        // model f on the grid

    // pending move, filled by propose()
    std::size_t pending_coord = 0;
    double pending_value = 0.0;
    double pending_component = 0.0;
    double pending_loss = kInf;
    double pending_log_prior = -kInf;
    bool pending_row = false;
    std::vector<double> pending_basis;
    std::vector<double> pending_integral;
    std::vector<double> pending_rate;
  };

  /// `pinned[j]`, when set, holds coordinate j fixed at that value and drops
  /// its prior factor.
  SpectralProblem(Spectrum spectrum, ModelSpec spec, PriorHyper hyper,
                  std::vector<std::optional<double>> pinned = {})
      : spectrum_(std::move(spectrum)),
        spec_(spec),
        hyper_(std::move(hyper)),
        pinned_(std::move(pinned)),
        log_factorial_sum_(spectrum_.log_factorial_sum()) {
    spec_.validate();
    hyper_.validate();
    if (hyper_.background_kind() != spec_.background)
      throw ConfigError("prior background block does not match the model background kind");
    const std::size_t dim = coordinate_count(spec_.K, spec_.background);
    if (pinned_.empty()) pinned_.resize(dim);
    if (pinned_.size() != dim) throw std::invalid_argument("SpectralProblem: pin vector size mismatch");
    roles_.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      roles_[j] = coordinate_role(j, spec_.K, spec_.background);
      if (pinned_[j] && is_positive_role(roles_[j]) && !(*pinned_[j] > 0.0))
        throw std::invalid_argument("SpectralProblem: pinned positive coordinate must be > 0");
    }
  }

  [[nodiscard]] double data_size() const noexcept { return static_cast<double>(spectrum_.size()); }
  [[nodiscard]] std::size_t dimension() const noexcept { return roles_.size(); }
  [[nodiscard]] const Spectrum& spectrum() const noexcept { return spectrum_; }
  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const PriorHyper& hyper() const noexcept { return hyper_; }

  [[nodiscard]] CoordinateInfo coordinate(std::size_t j) const {
    return {pinned_[j].has_value(), proposal_space_prior_sd(roles_[j], hyper_)};
  }

  /// Prior draw (pins applied) with a strictly positive model on the grid.
  [[nodiscard]] State initial_state(Stream& rng) const {
    constexpr int kMaxAttempts = 10000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      std::vector<double> c = to_coordinates(sample_prior(spec_.K, hyper_, rng));
      for (std::size_t j = 0; j < c.size(); ++j)
        if (pinned_[j]) c[j] = *pinned_[j];
      State s = make_state(std::move(c));
      if (std::isfinite(s.loss) && std::isfinite(s.log_prior)) return s;
    }
    throw NumericError("could not draw an initial state with a positive model on the grid");
  }

  /// Build a fully cached state at the given coordinates.
  [[nodiscard]] State make_state(std::vector<double> coords) const {
    if (coords.size() != dimension()) throw std::invalid_argument("make_state: wrong dimension");
    const std::size_t n = spectrum_.size();
    const auto K = static_cast<std::size_t>(spec_.K);
    State s;
    s.coords = std::move(coords);
    s.components.resize(dimension());
    for (std::size_t j = 0; j < dimension(); ++j) s.components[j] = component(j, s.coords[j]);
    s.log_prior = sum_components(s.components, dimension(), 0.0);
    s.basis.resize(K * n);
    if (shirley()) s.integral.resize(K * n);
    for (std::size_t k = 0; k < K; ++k)
      fill_rows(s.coords[3 * k + 1], s.coords[3 * k + 2], std::span(s.basis).subspan(k * n, n),
                shirley() ? std::span(s.integral).subspan(k * n, n) : std::span<double>{});
    s.rate.resize(n);
    compute_rate(s, s.coords, K, {}, {}, s.rate);
    s.loss = detail::total_loss(s.rate, spectrum_.counts, log_factorial_sum_);
    s.pending_basis.resize(n);
    if (shirley()) s.pending_integral.resize(n);
    s.pending_rate.resize(n);
    return s;
  }

  [[nodiscard]] Proposal propose(State& s, std::size_t j, double step, Stream& rng) const {
    const ParamRole role = roles_[j];
    const double current = s.coords[j];
    const double z = rng.normal();
    Proposal q;
    double next = 0.0;
    if (is_positive_role(role)) {
      next = current * std::exp(step * z);
      q.log_jacobian = step * z;
    } else {
      next = current + step * z;
    }
    s.pending_coord = j;
    s.pending_value = next;
    s.pending_component = component(j, next);
    s.pending_row = false;
    if (!std::isfinite(s.pending_component) || !std::isfinite(next)) {
      s.pending_loss = kInf;
      s.pending_log_prior = -kInf;
      return q;  // outside support
    }
    s.pending_log_prior = sum_components(s.components, j, s.pending_component);

    const double saved = s.coords[j];
    s.coords[j] = next;
    const auto K = static_cast<std::size_t>(spec_.K);
    std::size_t row = K;  // none
    if (role == ParamRole::Position || role == ParamRole::Shape) {
      row = j / 3;
      fill_rows(s.coords[3 * row + 1], s.coords[3 * row + 2], s.pending_basis,
                shirley() ? std::span<double>(s.pending_integral) : std::span<double>{});
      s.pending_row = true;
    }
    compute_rate(s, s.coords, row, s.pending_basis, s.pending_integral, s.pending_rate);
    s.coords[j] = saved;
    s.pending_loss = detail::total_loss(s.pending_rate, spectrum_.counts, log_factorial_sum_);

    q.loss = s.pending_loss;
    q.log_prior = s.pending_log_prior;
    return q;
  }

  void accept(State& s) const {
    const std::size_t j = s.pending_coord;
    s.coords[j] = s.pending_value;
    s.components[j] = s.pending_component;
    s.log_prior = s.pending_log_prior;
    s.loss = s.pending_loss;
    s.rate.swap(s.pending_rate);
    if (s.pending_row) {
      const std::size_t n = spectrum_.size();
      const std::size_t k = j / 3;
      std::copy(s.pending_basis.begin(), s.pending_basis.end(), s.basis.begin() + k * n);
      if (shirley())
        std::copy(s.pending_integral.begin(), s.pending_integral.end(), s.integral.begin() + k * n);
    }
  }

  [[nodiscard]] Theta snapshot(const State& s) const {
    return from_coordinates(s.coords, spec_.K, spec_.background);
  }

  /// Loss recomputed from scratch through the model module.
  [[nodiscard]] double fresh_loss(const State& s) const {
    const std::vector<double> f = eval_model(spectrum_.grid, snapshot(s), spec_);
    return detail::total_loss(f, spectrum_.counts, log_factorial_sum_);
  }

  [[nodiscard]] double fresh_log_prior(const State& s) const {
    std::vector<double> c(dimension());
    for (std::size_t j = 0; j < dimension(); ++j) c[j] = component(j, s.coords[j]);
    return sum_components(c, dimension(), 0.0);
  }

 private:
  [[nodiscard]] bool shirley() const noexcept { return spec_.background == BackgroundKind::Shirley; }

  [[nodiscard]] double component(std::size_t j, double value) const noexcept {
    if (pinned_[j]) return 0.0;
    return component_log_prior(roles_[j], value, hyper_);
  }

  /// Σ components in index order, with index `replace` taking `value`.
  [[nodiscard]] static double sum_components(const std::vector<double>& c, std::size_t replace,
                                             double value) noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) s += j == replace ? value : c[j];
    return s;
  }

  void fill_rows(double mu, double tau, std::span<double> basis, std::span<double> integral) const {
    const auto x = spectrum_.grid.values();
    for (std::size_t i = 0; i < x.size(); ++i) basis[i] = detail::basis_unchecked(x[i], mu, tau, spec_.basis);
    if (!integral.empty())
      for (std::size_t i = 0; i < x.size(); ++i)
        integral[i] = detail::unit_cumulative(x[i], mu, tau, spec_.basis);
  }

  /// f on the grid for `coords`, using the override rows for peak `row`.
  void compute_rate(const State& s, const std::vector<double>& coords, std::size_t row,
                    std::span<const double> row_basis, std::span<const double> row_integral,
                    std::vector<double>& out) const {
    const std::size_t n = spectrum_.size();
    const auto K = static_cast<std::size_t>(spec_.K);
    const std::size_t b = 3 * K;
    if (!shirley()) {
      std::fill(out.begin(), out.end(), coords[b]);
      for (std::size_t k = 0; k < K; ++k) {
        const double a = coords[3 * k];
        const double* phi = k == row ? row_basis.data() : s.basis.data() + k * n;
        for (std::size_t i = 0; i < n; ++i) out[i] += a * phi[i];
      }
      return;
    }
    const double c = coords[b];
    std::fill(out.begin(), out.end(), coords[b + 1]);
    for (std::size_t k = 0; k < K; ++k) {
      const double a = coords[3 * k];
      const double* phi = k == row ? row_basis.data() : s.basis.data() + k * n;
      const double* cum = k == row ? row_integral.data() : s.integral.data() + k * n;
      for (std::size_t i = 0; i < n; ++i) out[i] += a * (phi[i] + c * cum[i]);
    }
  }

  Spectrum spectrum_;
  ModelSpec spec_;
  PriorHyper hyper_;
  std::vector<std::optional<double>> pinned_;
  std::vector<ParamRole> roles_;
  double log_factorial_sum_;
};

static_assert(ExchangeProblem<SpectralProblem>);

/// Exchange Monte Carlo over the spectral posterior for one peak count.
[[nodiscard]] inline ChainRecord<Theta> run_emc(const Spectrum& spectrum, const ModelSpec& spec,
                                                const PriorHyper& hyper, const SamplerConfig& config) {
  return run_emc(SpectralProblem(spectrum, spec, hyper), config);
}

}  // namespace bayespec
