#pragma once

// Fit one peak count, or scan a range of peak counts and select by free energy.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayespec/evidence.hpp"
#include "bayespec/spectral_problem.hpp"

namespace bayespec {

struct FitResult {
  ModelSpec spec;
  std::uint64_t seed = 0;
  EvidenceResult evidence;
  Theta map;
  std::vector<double> exchange_acceptance;
  std::vector<double> posterior_acceptance;  ///< per coordinate at β = 1
  std::optional<ChainRecord<Theta>> chains;
};

/// Run the sampler for one K and summarize it. `config.seed` is used as is.
[[nodiscard]] inline FitResult fit_model(const Spectrum& spectrum, const ModelSpec& spec,
                                         const PriorHyper& hyper, const SamplerConfig& config,
                                         bool keep_chains = true) {
  ChainRecord<Theta> chains = run_emc(spectrum, spec, hyper, config);
  FitResult r;
  r.spec = spec;
  r.seed = config.seed;
  r.evidence = estimate_log_z(chains, build_ladder(config.replicas, config.gamma),
                              static_cast<double>(spectrum.size()));
  r.map = map_estimate(chains, spectrum, spec, hyper);
  r.exchange_acceptance = chains.exchange_acceptance;
  r.posterior_acceptance = chains.posterior().metropolis_acceptance;
  if (keep_chains) r.chains = std::move(chains);
  return r;
}

struct ScanResult {
  std::vector<FitResult> fits;  ///< ascending K
  ModelPosterior posterior;

  [[nodiscard]] const FitResult& at(int K) const {
    for (const auto& f : fits)
      if (f.spec.K == K) return f;
    throw std::out_of_range("ScanResult: no fit for K=" + std::to_string(K));
  }
  [[nodiscard]] const FitResult& selected() const { return at(posterior.selected); }
};

/// Seed used for peak count K within a scan seeded with `base`.
[[nodiscard]] constexpr std::uint64_t model_seed(std::uint64_t base, int K) noexcept {
  return derive_seed(base, {static_cast<std::uint64_t>(K)});
}

/// Fit every K in [k_min, k_max] and compute p(K | D) under a uniform p(K).
[[nodiscard]] inline ScanResult scan_models(const Spectrum& spectrum, Basis basis,
                                            BackgroundKind background, const PriorHyper& hyper,
                                            int k_min, int k_max, const SamplerConfig& base,
                                            bool keep_chains = true) {
  const auto prior_K = uniform_prior_K(k_min, k_max);
  ScanResult out;
  std::map<int, double> F;
  for (int K = k_min; K <= k_max; ++K) {
    SamplerConfig cfg = base;
    cfg.seed = model_seed(base.seed, K);
    out.fits.push_back(fit_model(spectrum, ModelSpec{basis, background, K}, hyper, cfg, keep_chains));
    F[K] = out.fits.back().evidence.F;
  }
  out.posterior = posterior_over_K(F, prior_K);
  return out;
}

}  // namespace bayespec
