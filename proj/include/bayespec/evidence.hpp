#pragma once

// Free energy from multi-temperature chains, posterior over the peak count,
// MAP extraction and per-peak posterior histograms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayespec/likelihood.hpp"
#include "bayespec/numeric.hpp"
#include "bayespec/priors.hpp"
#include "bayespec/sampler.hpp"

namespace bayespec {

struct EvidenceResult {
  double F = 0.0;                   ///< free energy -ln z(1), nats
  std::vector<double> log_z_steps;  ///< ln z(β_{m+1})/z(β_m), m = 1..M-1
  double mc_se = 0.0;               ///< block-jackknife standard error of F
};

namespace detail {

/// Per-bridge log ratios using every sample except those in [skip_begin, skip_end).
[[nodiscard]] inline std::vector<double> bridge_logs(const std::vector<const std::vector<double>*>& E,
                                                     const std::vector<double>& betas, double n,
                                                     std::size_t skip_begin, std::size_t skip_end) {
  std::vector<double> out;
  out.reserve(betas.size() - 1);
  std::vector<double> w;
  for (std::size_t m = 0; m + 1 < betas.size(); ++m) {
    const double scale = -n * (betas[m + 1] - betas[m]);
    const auto& e = *E[m];
    w.clear();
    for (std::size_t t = 0; t < e.size(); ++t) {
      if (t >= skip_begin && t < skip_end) continue;
      // n = 0 gives a factor of exactly 1 even for infinite E
      w.push_back(scale == 0.0 ? 0.0 : scale * e[t]);
    }
    out.push_back(log_sum_exp(w) - std::log(static_cast<double>(w.size())));
  }
  return out;
}

}  // namespace detail

/// Telescoping estimate z(1) = Π_m < exp(-n (β_{m+1} - β_m) E) >_{β_m}, F = -ln z(1).
/// Energies are per data point; `betas` has one entry per replica chain.
[[nodiscard]] inline EvidenceResult estimate_log_z(const std::vector<std::vector<double>>& energies,
                                                   const std::vector<double>& betas, double n,
                                                   std::size_t jackknife_blocks = 20) {
  if (energies.size() != betas.size() || betas.size() < 2)
    throw std::invalid_argument("estimate_log_z: need one energy chain per ladder rung (>= 2)");
  std::size_t len = energies.front().size();
  for (const auto& e : energies) {
    if (e.empty()) throw std::invalid_argument("estimate_log_z: empty chain for a replica");
    len = std::min(len, e.size());
  }
  std::vector<const std::vector<double>*> E;
  for (const auto& e : energies) E.push_back(&e);

  EvidenceResult r;
  r.log_z_steps = detail::bridge_logs(E, betas, n, 0, 0);
  double sum = 0.0;
  for (double s : r.log_z_steps) sum += s;
  r.F = -sum;

  // Delete-one-block jackknife; blocks are aligned in sweep time across replicas.
  const std::size_t blocks = std::min(jackknife_blocks, len);
  if (blocks < 2) {
    r.mc_se = kInf;
    return r;
  }
  std::vector<double> partial(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * len / blocks;
    const std::size_t hi = (b + 1) * len / blocks;
    double s = 0.0;
    for (double v : detail::bridge_logs(E, betas, n, lo, hi)) s += v;
    partial[b] = -s;
  }
  double mean = 0.0;
  for (double v : partial) mean += v;
  mean /= static_cast<double>(blocks);
  double ss = 0.0;
  for (double v : partial) ss += (v - mean) * (v - mean);
  r.mc_se = std::sqrt(static_cast<double>(blocks - 1) / static_cast<double>(blocks) * ss);
  return r;
}

template <class Sample>
[[nodiscard]] EvidenceResult estimate_log_z(const ChainRecord<Sample>& chains, const Ladder& ladder,
                                            double n) {
  if (chains.replicas.size() != ladder.size())
    throw std::invalid_argument("estimate_log_z: chain and ladder sizes differ");
  std::vector<std::vector<double>> energies;
  energies.reserve(chains.replicas.size());
  for (const auto& r : chains.replicas) energies.push_back(r.energies);
  return estimate_log_z(energies, ladder.betas, n);
}

struct ModelPosterior {
  std::map<int, double> F;
  std::map<int, double> probability;
  int selected = 0;
};

/// p(K | D) ∝ p(K) exp(-F(K)); the selected K maximizes it (smallest K on ties).
[[nodiscard]] inline ModelPosterior posterior_over_K(const std::map<int, double>& F_by_K,
                                                     const std::map<int, double>& prior_K) {
  if (F_by_K.empty()) throw std::invalid_argument("posterior_over_K: no models");
  double prior_total = 0.0;
  for (const auto& [K, f] : F_by_K) {
    const auto it = prior_K.find(K);
    if (it == prior_K.end() || !(it->second >= 0.0))
      throw std::invalid_argument("posterior_over_K: missing or negative prior for K=" +
                                  std::to_string(K));
    prior_total += it->second;
  }
  if (std::abs(prior_total - 1.0) > 1e-9)
    throw std::invalid_argument("posterior_over_K: prior over K must sum to 1");

  ModelPosterior out;
  out.F = F_by_K;
  // F relative to its minimum keeps large free energies from losing digits
  double f_min = kInf;
  for (const auto& [K, f] : F_by_K) f_min = std::min(f_min, f);
  if (!std::isfinite(f_min)) f_min = 0.0;
  std::vector<double> logw;
  for (const auto& [K, f] : F_by_K) {
    const double p = prior_K.at(K);
    logw.push_back(p > 0.0 ? std::log(p) - (f - f_min) : -kInf);
  }
  const double norm = log_sum_exp(logw);
  std::size_t i = 0;
  double best = -1.0;
  for (const auto& [K, f] : F_by_K) {
    const double p = std::isfinite(norm) ? std::exp(logw[i] - norm) : 0.0;
    out.probability[K] = p;
    if (p > best) {
      best = p;
      out.selected = K;
    }
    ++i;
  }
  return out;
}

/// Discrete uniform p(K) over [k_min, k_max].
[[nodiscard]] inline std::map<int, double> uniform_prior_K(int k_min, int k_max) {
  if (k_min < 1 || k_max < k_min) throw std::invalid_argument("uniform_prior_K: empty K range");
  std::map<int, double> p;
  for (int K = k_min; K <= k_max; ++K) p[K] = 1.0 / static_cast<double>(k_max - k_min + 1);
  return p;
}

/// Highest-posterior recorded β = 1 sample, scored on -nE + ln p(θ|K) with
/// peaks relabeled by ascending position.
[[nodiscard]] inline Theta map_estimate(const ChainRecord<Theta>& chains, const Spectrum& spectrum,
                                        const ModelSpec& spec, const PriorHyper& hyper) {
  if (chains.replicas.empty() || chains.posterior().samples.empty())
    throw std::invalid_argument("map_estimate: empty posterior chain");
  const auto& post = chains.posterior();
  const double n = static_cast<double>(spectrum.size());
  std::optional<std::size_t> best;
  double best_score = -kInf;
  for (std::size_t t = 0; t < post.samples.size(); ++t) {
    const Theta sorted = post.samples[t].sorted_by_position();
    const double score = -n * post.energies[t] + log_prior_density(sorted, spec.K, hyper);
    if (!best || score > best_score) {
      best = t;
      best_score = score;
    }
  }
  return post.samples[*best].sorted_by_position();
}

enum class PeakParameter { Amplitude, Position, Shape };

[[nodiscard]] inline double peak_value(const Peak& p, PeakParameter which) noexcept {
  switch (which) {
    case PeakParameter::Amplitude: return p.amplitude;
    case PeakParameter::Position: return p.position;
    case PeakParameter::Shape: return p.shape;
  }
  return p.position;
}

/// Fixed-width binning; an unset range spans the observed values.
struct Binning {
  std::size_t bins = 50;
  std::optional<double> lo;
  std::optional<double> hi;
};

struct PeakHistogram {
  std::vector<double> edges;  ///< bins + 1 edges
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;
  double ci_low = 0.0;   ///< 2.5% quantile
  double ci_high = 0.0;  ///< 97.5% quantile
  double mean = 0.0;

  [[nodiscard]] std::uint64_t total() const noexcept {
    std::uint64_t t = underflow + overflow;
    for (auto c : counts) t += c;
    return t;
  }
};

/// Linear-interpolation quantile of sorted data.
[[nodiscard]] inline double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty data");
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Per-peak histograms and central 95% intervals from the β = 1 chain, after
/// ascending-position relabeling of every sample.
[[nodiscard]] inline std::vector<PeakHistogram> posterior_histograms(const ChainRecord<Theta>& chains,
                                                                     PeakParameter which,
                                                                     const Binning& binning = {}) {
  if (chains.replicas.empty() || chains.posterior().samples.empty())
    throw std::invalid_argument("posterior_histograms: empty posterior chain");
  if (binning.bins == 0) throw std::invalid_argument("posterior_histograms: need at least one bin");
  const auto& samples = chains.posterior().samples;
  const std::size_t K = samples.front().K();
  std::vector<std::vector<double>> values(K);
  for (const Theta& t : samples) {
    const Theta s = t.sorted_by_position();
    for (std::size_t k = 0; k < K; ++k) values[k].push_back(peak_value(s.peaks[k], which));
  }
  double lo = kInf;
  double hi = -kInf;
  for (const auto& v : values)
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  lo = binning.lo.value_or(lo);
  hi = binning.hi.value_or(hi);
  if (!(hi > lo)) hi = lo + 1e-9 * std::max(1.0, std::abs(lo));

  std::vector<PeakHistogram> out(K);
  const double width = (hi - lo) / static_cast<double>(binning.bins);
  for (std::size_t k = 0; k < K; ++k) {
    PeakHistogram& h = out[k];
    h.edges.resize(binning.bins + 1);
    for (std::size_t b = 0; b <= binning.bins; ++b) h.edges[b] = lo + static_cast<double>(b) * width;
    h.edges.back() = hi;
    h.counts.assign(binning.bins, 0);
    double sum = 0.0;
    for (double x : values[k]) {
      sum += x;
      if (x < lo) {
        ++h.underflow;
      } else if (x > hi) {
        ++h.overflow;
      } else {
        auto b = static_cast<std::size_t>((x - lo) / width);
        ++h.counts[std::min(b, binning.bins - 1)];
      }
    }
    h.mean = sum / static_cast<double>(values[k].size());
    std::vector<double> sorted = values[k];
    std::sort(sorted.begin(), sorted.end());
    h.ci_low = quantile_sorted(sorted, 0.025);
    h.ci_high = quantile_sorted(sorted, 0.975);
  }
  return out;
}

/// True if the closed intervals [a_lo, a_hi] and [b_lo, b_hi] intersect.
[[nodiscard]] constexpr bool intervals_overlap(double a_lo, double a_hi, double b_lo,
                                               double b_hi) noexcept {
  return a_lo <= b_hi && b_lo <= a_hi;
}

}  // namespace bayespec
