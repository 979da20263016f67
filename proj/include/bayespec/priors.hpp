#pragma once

// Independent Gamma / Gaussian priors over peak and background parameters.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "bayespec/error.hpp"
#include "bayespec/model.hpp"
#include "bayespec/numeric.hpp"
#include "bayespec/random.hpp"

namespace bayespec {

/// How the second Gamma hyperparameter (lambda) is read.
///   Rate:  p(x) = lambda^eta x^(eta-1) exp(-lambda x) / Γ(eta),  mean eta/lambda
///   Scale: p(x) = x^(eta-1) exp(-x/lambda) / (Γ(eta) lambda^eta), mean eta*lambda
enum class GammaForm { Rate, Scale };

struct ConstantBackgroundPrior {
  double nu_B = 0.0;  ///< mean of the level
  double xi_B = 1.0;  ///< standard deviation of the level

  friend bool operator==(const ConstantBackgroundPrior&, const ConstantBackgroundPrior&) = default;
};

struct ShirleyBackgroundPrior {
  double eta_c = 1.0;
  double lambda_c = 1.0;
  double nu_start = 0.0;
  double xi_start = 1.0;

  friend bool operator==(const ShirleyBackgroundPrior&, const ShirleyBackgroundPrior&) = default;
};

/// Hyperparameters of p(θ | K). Shape/width priors act on tau = 1/sigma^2.
struct PriorHyper {
  double eta_a = 2.0;
  double lambda_a = 2.0;
  double nu_0 = 160.0;
  double xi_0 = 2.0;
  double eta_sigma = 10.0;
  double lambda_sigma = 2.5;
  std::variant<ConstantBackgroundPrior, ShirleyBackgroundPrior> background =
      ConstantBackgroundPrior{};
  GammaForm gamma_form = GammaForm::Rate;  ///< how lambda_a, lambda_sigma and lambda_c are read

  [[nodiscard]] BackgroundKind background_kind() const noexcept {
    return std::holds_alternative<ShirleyBackgroundPrior>(background) ? BackgroundKind::Shirley
                                                                      : BackgroundKind::Constant;
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string("prior hyperparameter ") + name + " must be finite and > 0");
    };
    positive(eta_a, "eta_a");
    positive(lambda_a, "lambda_a");
    positive(xi_0, "xi_0");
    positive(eta_sigma, "eta_sigma");
    positive(lambda_sigma, "lambda_sigma");
    if (!std::isfinite(nu_0)) throw ConfigError("prior hyperparameter nu_0 must be finite");
    if (const auto* c = std::get_if<ConstantBackgroundPrior>(&background)) {
      positive(c->xi_B, "xi_B");
      if (!std::isfinite(c->nu_B)) throw ConfigError("prior hyperparameter nu_B must be finite");
    } else {
      const auto& s = std::get<ShirleyBackgroundPrior>(background);
      positive(s.eta_c, "eta_c");
      positive(s.lambda_c, "lambda_c");
      positive(s.xi_start, "xi_start");
      if (!std::isfinite(s.nu_start))
        throw ConfigError("prior hyperparameter nu_start must be finite");
    }
  }

  friend bool operator==(const PriorHyper&, const PriorHyper&) = default;
};

[[nodiscard]] inline double gamma_log_pdf(double x, double eta, double lambda, GammaForm form) noexcept {
  if (!(x > 0.0)) return -kInf;
  if (form == GammaForm::Rate)
    return eta * std::log(lambda) - log_gamma(eta) + (eta - 1.0) * std::log(x) - lambda * x;
  return -eta * std::log(lambda) - log_gamma(eta) + (eta - 1.0) * std::log(x) - x / lambda;
}

[[nodiscard]] inline double normal_log_pdf(double x, double mean, double sd) noexcept {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

[[nodiscard]] inline double gamma_scale(double lambda, GammaForm form) noexcept {
  return form == GammaForm::Rate ? 1.0 / lambda : lambda;
}

/// Log prior density of a single coordinate with the given role.
[[nodiscard]] inline double component_log_prior(ParamRole role, double value,
                                                const PriorHyper& h) noexcept {
  switch (role) {
    case ParamRole::Amplitude: return gamma_log_pdf(value, h.eta_a, h.lambda_a, h.gamma_form);
    case ParamRole::Position: return normal_log_pdf(value, h.nu_0, h.xi_0);
    case ParamRole::Shape: return gamma_log_pdf(value, h.eta_sigma, h.lambda_sigma, h.gamma_form);
    case ParamRole::Level: {
      const auto& c = std::get<ConstantBackgroundPrior>(h.background);
      return normal_log_pdf(value, c.nu_B, c.xi_B);
    }
    case ParamRole::Coefficient: {
      const auto& s = std::get<ShirleyBackgroundPrior>(h.background);
      return gamma_log_pdf(value, s.eta_c, s.lambda_c, h.gamma_form);
    }
    case ParamRole::Start: {
      const auto& s = std::get<ShirleyBackgroundPrior>(h.background);
      return normal_log_pdf(value, s.nu_start, s.xi_start);
    }
  }
  return -kInf;
}

/// Gamma-distributed coordinates are strictly positive.
[[nodiscard]] constexpr bool is_positive_role(ParamRole role) noexcept {
  return role == ParamRole::Amplitude || role == ParamRole::Shape ||
         role == ParamRole::Coefficient;
}

/// Prior standard deviation of a coordinate in the space it is proposed in:
/// ln(x) for the positive (Gamma) coordinates, x itself otherwise.
/// For ln(x) with x ~ Gamma(eta, .) this is sqrt(trigamma(eta)).
[[nodiscard]] inline double proposal_space_prior_sd(ParamRole role, const PriorHyper& h) noexcept {
  switch (role) {
    case ParamRole::Amplitude: return std::sqrt(trigamma(h.eta_a));
    case ParamRole::Position: return h.xi_0;
    case ParamRole::Shape: return std::sqrt(trigamma(h.eta_sigma));
    case ParamRole::Level: return std::get<ConstantBackgroundPrior>(h.background).xi_B;
    case ParamRole::Coefficient:
      return std::sqrt(trigamma(std::get<ShirleyBackgroundPrior>(h.background).eta_c));
    case ParamRole::Start: return std::get<ShirleyBackgroundPrior>(h.background).xi_start;
  }
  return 1.0;
}

/// ln p(θ | K), summed over coordinates in flat-layout order. -inf outside
/// the support (a <= 0, tau <= 0, c <= 0).
[[nodiscard]] inline double log_prior_density(const Theta& theta, int K, const PriorHyper& hyper) {
  if (theta.K() != static_cast<std::size_t>(K))
    throw std::invalid_argument("log_prior_density: theta has " + std::to_string(theta.K()) +
                                " peaks, expected " + std::to_string(K));
  if (kind_of(theta.background) != hyper.background_kind())
    throw std::invalid_argument("log_prior_density: background kind does not match hyperparameters");
  const std::vector<double> coords = to_coordinates(theta);
  const BackgroundKind bg = hyper.background_kind();
  double lp = 0.0;
  for (std::size_t j = 0; j < coords.size(); ++j) {
    const double c = component_log_prior(coordinate_role(j, K, bg), coords[j], hyper);
    if (c == -kInf) return -kInf;
    lp += c;
  }
  return lp;
}

/// Draw a single coordinate from its prior.
[[nodiscard]] inline double sample_component(ParamRole role, const PriorHyper& h, Stream& rng) {
  switch (role) {
    case ParamRole::Amplitude: return rng.gamma(h.eta_a, gamma_scale(h.lambda_a, h.gamma_form));
    case ParamRole::Position: return rng.normal(h.nu_0, h.xi_0);
    case ParamRole::Shape:
      return rng.gamma(h.eta_sigma, gamma_scale(h.lambda_sigma, h.gamma_form));
    case ParamRole::Level: {
      const auto& c = std::get<ConstantBackgroundPrior>(h.background);
      return rng.normal(c.nu_B, c.xi_B);
    }
    case ParamRole::Coefficient: {
      const auto& s = std::get<ShirleyBackgroundPrior>(h.background);
      return rng.gamma(s.eta_c, gamma_scale(s.lambda_c, h.gamma_form));
    }
    case ParamRole::Start: {
      const auto& s = std::get<ShirleyBackgroundPrior>(h.background);
      return rng.normal(s.nu_start, s.xi_start);
    }
  }
  return 0.0;
}

/// Independent draw of every coordinate from p(θ | K).
[[nodiscard]] inline Theta sample_prior(int K, const PriorHyper& hyper, Stream& rng) {
  if (K < 1) throw std::invalid_argument("sample_prior: K must be >= 1");
  const BackgroundKind bg = hyper.background_kind();
  std::vector<double> coords(coordinate_count(K, bg));
  for (std::size_t j = 0; j < coords.size(); ++j) {
    double v = sample_component(coordinate_role(j, K, bg), hyper, rng);
    // Gamma draws with tiny shape can underflow to exactly zero.
    while (is_positive_role(coordinate_role(j, K, bg)) && !(v > 0.0))
      v = sample_component(coordinate_role(j, K, bg), hyper, rng);
    coords[j] = v;
  }
  return from_coordinates(coords, K, bg);
}

enum class Preset { Synthetic4, MoS2_5 };

[[nodiscard]] inline Preset parse_preset(std::string_view name) {
  if (name == "Synthetic4") return Preset::Synthetic4;
  if (name == "MoS2_5") return Preset::MoS2_5;
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected Synthetic4 or MoS2_5)");
}

[[nodiscard]] inline std::string_view preset_name(Preset p) noexcept {
  return p == Preset::Synthetic4 ? "Synthetic4" : "MoS2_5";
}

/// Gamma convention of the named presets. Their lambda values are scales:
/// lambda_a = 2T read as a rate would put the amplitude prior mean at 1/T.
inline constexpr GammaForm kPresetGammaForm = GammaForm::Scale;

/// Named hyperparameter sets with the pseudo-measurement time T substituted.
[[nodiscard]] inline PriorHyper preset(Preset name, double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("preset: T must be finite and > 0");
  PriorHyper h;
  h.gamma_form = kPresetGammaForm;
  h.eta_a = 2.0;
  h.lambda_a = 2.0 * T;
  h.nu_0 = 160.0;
  h.eta_sigma = 10.0;
  if (name == Preset::Synthetic4) {
    h.xi_0 = 2.0;
    h.lambda_sigma = 2.5;
    h.background = ConstantBackgroundPrior{0.1 * T, 0.01 * T};
  } else {
    h.xi_0 = 5.0;
    h.lambda_sigma = 0.4;
    h.background = ShirleyBackgroundPrior{0.8, 0.8, 0.35 * T, 0.1 * T};
  }
  return h;
}

/// Model family and ladder that accompany each preset.
struct PresetDefaults {
  Basis basis;
  BackgroundKind background;
  int replicas;
  double gamma;
};

[[nodiscard]] constexpr PresetDefaults preset_defaults(Preset name) noexcept {
  if (name == Preset::Synthetic4)
    return {Basis::Gaussian, BackgroundKind::Constant, 32, 1.5};
  return {Basis::PseudoVoigt7030, BackgroundKind::Shirley, 64, 1.25};
}

}  // namespace bayespec
