#pragma once

// Deterministic spectral model: f(x) = G(x) + B(x) with G a weighted sum of
// unimodal peaks and B either a constant or a Shirley-type background.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bayespec/error.hpp"

namespace bayespec {

enum class Basis { Gaussian, PseudoVoigt7030 };
enum class BackgroundKind { Constant, Shirley };

/// One peak. `shape` is the inverse squared width tau (eV^-2): 1/sigma^2 for
/// the Gaussian basis and the b parameter for the pseudo-Voigt basis.
struct Peak {
  double amplitude = 0.0;
  double position = 0.0;
  double shape = 1.0;

  friend bool operator==(const Peak&, const Peak&) = default;
};

struct ConstantBackground {
  double level = 0.0;
  friend bool operator==(const ConstantBackground&, const ConstantBackground&) = default;
};

/// B(x) = coefficient * ∫_{-inf}^{x} G(u) du + start
struct ShirleyBackground {
  double coefficient = 0.0;
  double start = 0.0;
  friend bool operator==(const ShirleyBackground&, const ShirleyBackground&) = default;
};

using Background = std::variant<ConstantBackground, ShirleyBackground>;

[[nodiscard]] inline BackgroundKind kind_of(const Background& b) noexcept {
  return std::holds_alternative<ShirleyBackground>(b) ? BackgroundKind::Shirley
                                                      : BackgroundKind::Constant;
}

/// Full parameter vector: K peaks plus background parameters.
struct Theta {
  std::vector<Peak> peaks;
  Background background = ConstantBackground{};

  [[nodiscard]] std::size_t K() const noexcept { return peaks.size(); }

  /// Relabel peaks so positions are ascending. The likelihood and the
  /// prior are both symmetric under peak permutations.
  void sort_by_position() {
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& l, const Peak& r) { return l.position < r.position; });
  }

  [[nodiscard]] Theta sorted_by_position() const {
    Theta t = *this;
    t.sort_by_position();
    return t;
  }

  friend bool operator==(const Theta&, const Theta&) = default;
};

struct ModelSpec {
  Basis basis = Basis::Gaussian;
  BackgroundKind background = BackgroundKind::Constant;
  int K = 1;

  void validate() const {
    if (K < 1) throw std::invalid_argument("ModelSpec: K must be >= 1");
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Strictly increasing energy abscissae.
class Grid {
 public:
  Grid() = default;

  explicit Grid(std::vector<double> x) : x_(std::move(x)) {
    if (x_.size() < 2) throw std::invalid_argument("Grid: need at least 2 points");
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!std::isfinite(x_[i])) throw std::invalid_argument("Grid: non-finite energy");
      if (i > 0 && !(x_[i] > x_[i - 1]))
        throw std::invalid_argument("Grid: energies must be strictly increasing");
    }
  }

  /// Uniform grid start, start+step, ... up to and including stop (within
  /// half a step).
  static Grid uniform(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop > start))
      throw std::invalid_argument("Grid::uniform: need stop > start and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 0.5)) + 1;
    std::vector<double> x(count);
    for (std::size_t i = 0; i < count; ++i) x[i] = start + static_cast<double>(i) * step;
    return Grid(std::move(x));
  }

  [[nodiscard]] std::size_t size() const noexcept { return x_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return x_[i]; }
  [[nodiscard]] std::span<const double> values() const noexcept { return x_; }
  [[nodiscard]] double front() const noexcept { return x_.front(); }
  [[nodiscard]] double back() const noexcept { return x_.back(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::vector<double> x_;
};

namespace detail {

inline constexpr double kPvGaussWeight = 0.3 * std::numbers::ln2;
inline constexpr double kPvLorentzWeight = 0.7;

/// Unit-apex basis as a function of the scaled squared distance q = tau (x-mu)^2.
[[nodiscard]] inline double basis_of_q(double q, Basis basis) noexcept {
  if (basis == Basis::Gaussian) return std::exp(-0.5 * q);
  return std::exp(-kPvGaussWeight * q) / (1.0 + kPvLorentzWeight * q);
}

[[nodiscard]] inline double basis_unchecked(double x, double mu, double tau, Basis basis) noexcept {
  const double d = x - mu;
  return basis_of_q(tau * d * d, basis);
}

/// Ψ(t) = ∫_{-inf}^{t} φ(u) du for the unit pseudo-Voigt φ(u) with tau = 1.
/// Tabulated once on [-L, L] (tails beyond L are below 1e-140) by 5-point
/// Gauss-Legendre per panel and evaluated by cubic Hermite interpolation
/// using φ as the exact derivative.
class PseudoVoigtIntegral {
 public:
  static constexpr double kHalfRange = 40.0;
  static constexpr double kStep = 1.0 / 256.0;

  static const PseudoVoigtIntegral& instance() {
    static const PseudoVoigtIntegral table;
    return table;
  }

  [[nodiscard]] double operator()(double t) const noexcept {
    if (t <= -kHalfRange) return 0.0;
    if (t >= kHalfRange) return total_;
    const double pos = (t + kHalfRange) / kStep;
    auto j = static_cast<std::size_t>(pos);
    if (j >= values_.size() - 1) j = values_.size() - 2;
    const double s = pos - static_cast<double>(j);
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * values_[j] + h10 * kStep * slopes_[j] + h01 * values_[j + 1] +
           h11 * kStep * slopes_[j + 1];
  }

  /// ∫ φ(u) du over the real line.
  [[nodiscard]] double total() const noexcept { return total_; }

 private:
  PseudoVoigtIntegral() {
    const auto panels = static_cast<std::size_t>(std::lround(2 * kHalfRange / kStep));
    values_.resize(panels + 1);
    slopes_.resize(panels + 1);
    // 5-point Gauss-Legendre nodes/weights on [-1, 1].
    constexpr std::array<double, 5> nodes{0.0, -0.5384693101056831, 0.5384693101056831,
                                          -0.9061798459386640, 0.9061798459386640};
    constexpr std::array<double, 5> weights{0.5688888888888889, 0.4786286704993665,
                                            0.4786286704993665, 0.2369268850561891,
                                            0.2369268850561891};
    double acc = 0.0;
    for (std::size_t j = 0; j <= panels; ++j) {
      const double t = -kHalfRange + static_cast<double>(j) * kStep;
      values_[j] = acc;
      slopes_[j] = basis_of_q(t * t, Basis::PseudoVoigt7030);
      if (j == panels) break;
      const double mid = t + 0.5 * kStep;
      double panel = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double u = mid + 0.5 * kStep * nodes[q];
        panel += weights[q] * basis_of_q(u * u, Basis::PseudoVoigt7030);
      }
      acc += 0.5 * kStep * panel;
    }
    total_ = acc;
  }

  std::vector<double> values_;
  std::vector<double> slopes_;
  double total_ = 0.0;
};

/// ∫_{-inf}^{x} φ(u; mu, tau) du for a unit-apex peak.
[[nodiscard]] inline double unit_cumulative(double x, double mu, double tau, Basis basis) noexcept {
  const double root = std::sqrt(tau);
  if (basis == Basis::Gaussian) {
    // sqrt(pi / 2tau) * erfc(-(x - mu) sqrt(tau / 2))
    return std::sqrt(std::numbers::pi / (2.0 * tau)) *
           std::erfc(-(x - mu) * root * std::numbers::sqrt2 * 0.5);
  }
  return PseudoVoigtIntegral::instance()(root * (x - mu)) / root;
}

inline void check_peak(const Peak& p) {
  if (!std::isfinite(p.shape) || !(p.shape > 0.0))
    throw std::invalid_argument("peak shape (tau) must be finite and > 0");
  if (!std::isfinite(p.position)) throw std::invalid_argument("peak position must be finite");
  if (!std::isfinite(p.amplitude)) throw std::invalid_argument("peak amplitude must be finite");
}

inline void check_theta(const Theta& theta, const ModelSpec& spec) {
  spec.validate();
  if (theta.K() != static_cast<std::size_t>(spec.K))
    throw std::invalid_argument("theta has " + std::to_string(theta.K()) +
                                " peaks but model expects K=" + std::to_string(spec.K));
  if (kind_of(theta.background) != spec.background)
    throw std::invalid_argument("theta background kind does not match model spec");
  for (const Peak& p : theta.peaks) check_peak(p);
}

}  // namespace detail

/// Unit-apex basis value φ(x; mu, tau) in (0, 1].
[[nodiscard]] inline double eval_basis(double x, const Peak& peak, Basis basis) {
  if (!std::isfinite(x)) throw std::invalid_argument("eval_basis: non-finite x");
  detail::check_peak(peak);
  return detail::basis_unchecked(x, peak.position, peak.shape, basis);
}

/// G(x) = Σ_k a_k φ(x; mu_k, tau_k)
[[nodiscard]] inline double eval_signal(double x, const Theta& theta, const ModelSpec& spec) {
  detail::check_theta(theta, spec);
  if (!std::isfinite(x)) throw std::invalid_argument("eval_signal: non-finite x");
  double g = 0.0;
  for (const Peak& p : theta.peaks)
    g += p.amplitude * detail::basis_unchecked(x, p.position, p.shape, spec.basis);
  return g;
}

/// I(x_i) = ∫_{-inf}^{x_i} G(u) du at every grid point.
[[nodiscard]] inline std::vector<double> cumulative_signal(const Grid& grid, const Theta& theta,
                                                           const ModelSpec& spec) {
  detail::check_theta(theta, spec);
  std::vector<double> out(grid.size(), 0.0);
  for (const Peak& p : theta.peaks) {
    if (p.amplitude == 0.0) continue;
    for (std::size_t i = 0; i < grid.size(); ++i)
      out[i] += p.amplitude * detail::unit_cumulative(grid[i], p.position, p.shape, spec.basis);
  }
  for (double v : out)
    if (!std::isfinite(v)) throw NumericError("cumulative_signal: non-finite integral");
  return out;
}

/// Per-component decomposition of the model on a grid: one curve per peak
/// plus the background. The components sum to the model.
struct ModelComponents {
  std::vector<std::vector<double>> peaks;
  std::vector<double> background;
  std::vector<double> total;
};

[[nodiscard]] inline ModelComponents decompose_model(const Grid& grid, const Theta& theta,
                                                     const ModelSpec& spec) {
  detail::check_theta(theta, spec);
  const std::size_t n = grid.size();
  ModelComponents out;
  out.peaks.assign(theta.K(), std::vector<double>(n, 0.0));
  out.background.assign(n, 0.0);
  for (std::size_t k = 0; k < theta.K(); ++k) {
    const Peak& p = theta.peaks[k];
    for (std::size_t i = 0; i < n; ++i)
      out.peaks[k][i] = p.amplitude * detail::basis_unchecked(grid[i], p.position, p.shape, spec.basis);
  }
  if (const auto* c = std::get_if<ConstantBackground>(&theta.background)) {
    std::fill(out.background.begin(), out.background.end(), c->level);
  } else {
    const auto& s = std::get<ShirleyBackground>(theta.background);
    const std::vector<double> integral = cumulative_signal(grid, theta, spec);
    for (std::size_t i = 0; i < n; ++i) out.background[i] = s.coefficient * integral[i] + s.start;
  }
  out.total = out.background;
  for (const auto& peak : out.peaks)
    for (std::size_t i = 0; i < n; ++i) out.total[i] += peak[i];
  return out;
}

/// f(x_i) = G(x_i) + B(x_i) for every grid point.
[[nodiscard]] inline std::vector<double> eval_model(const Grid& grid, const Theta& theta,
                                                    const ModelSpec& spec) {
  detail::check_theta(theta, spec);
  const std::size_t n = grid.size();
  std::vector<double> f(n, 0.0);
  for (const Peak& p : theta.peaks)
    for (std::size_t i = 0; i < n; ++i)
      f[i] += p.amplitude * detail::basis_unchecked(grid[i], p.position, p.shape, spec.basis);
  if (const auto* c = std::get_if<ConstantBackground>(&theta.background)) {
    for (double& v : f) v += c->level;
  } else {
    const auto& s = std::get<ShirleyBackground>(theta.background);
    const std::vector<double> integral = cumulative_signal(grid, theta, spec);
    for (std::size_t i = 0; i < n; ++i) f[i] += s.coefficient * integral[i] + s.start;
  }
  return f;
}

/// Role of one coordinate in the flat parameter layout
/// [a_1, mu_1, tau_1, ..., a_K, mu_K, tau_K, background...].
enum class ParamRole { Amplitude, Position, Shape, Level, Coefficient, Start };

[[nodiscard]] inline std::size_t coordinate_count(int K, BackgroundKind bg) noexcept {
  return 3 * static_cast<std::size_t>(K) + (bg == BackgroundKind::Shirley ? 2 : 1);
}

[[nodiscard]] inline ParamRole coordinate_role(std::size_t j, int K, BackgroundKind bg) noexcept {
  const auto peak_coords = 3 * static_cast<std::size_t>(K);
  if (j < peak_coords) {
    switch (j % 3) {
      case 0: return ParamRole::Amplitude;
      case 1: return ParamRole::Position;
      default: return ParamRole::Shape;
    }
  }
  if (bg == BackgroundKind::Constant) return ParamRole::Level;
  return j == peak_coords ? ParamRole::Coefficient : ParamRole::Start;
}

[[nodiscard]] inline std::vector<double> to_coordinates(const Theta& theta) {
  std::vector<double> c;
  c.reserve(3 * theta.K() + 2);
  for (const Peak& p : theta.peaks) {
    c.push_back(p.amplitude);
    c.push_back(p.position);
    c.push_back(p.shape);
  }
  if (const auto* b = std::get_if<ConstantBackground>(&theta.background)) {
    c.push_back(b->level);
  } else {
    const auto& s = std::get<ShirleyBackground>(theta.background);
    c.push_back(s.coefficient);
    c.push_back(s.start);
  }
  return c;
}

[[nodiscard]] inline Theta from_coordinates(std::span<const double> c, int K, BackgroundKind bg) {
  if (c.size() != coordinate_count(K, bg))
    throw std::invalid_argument("from_coordinates: coordinate count does not match K");
  Theta t;
  t.peaks.resize(static_cast<std::size_t>(K));
  for (std::size_t k = 0; k < t.peaks.size(); ++k)
    t.peaks[k] = Peak{c[3 * k], c[3 * k + 1], c[3 * k + 2]};
  const std::size_t b = 3 * t.peaks.size();
  if (bg == BackgroundKind::Constant)
    t.background = ConstantBackground{c[b]};
  else
    t.background = ShirleyBackground{c[b], c[b + 1]};
  return t;
}

}  // namespace bayespec
