#pragma once

// Exchange Monte Carlo (parallel tempering) over an arbitrary problem type.
//
// A problem supplies the tempered target piecewise: a cached total loss
// n·E(θ) and log prior per state, and coordinate-wise proposals that are
// evaluated into scratch space inside the state and committed on accept.
// Replica m targets exp(-β_m n E(θ)) p(θ).

#include <algorithm>
#include <barrier>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bayespec/error.hpp"
#include "bayespec/numeric.hpp"
#include "bayespec/random.hpp"

namespace bayespec {

/// Result of evaluating one proposed coordinate move.
struct Proposal {
  double loss = kInf;        ///< n·E at the proposed point
  double log_prior = -kInf;  ///< ln p(θ') (free coordinates only)
  double log_jacobian = 0.0; ///< ln q(θ|θ')/q(θ'|θ) correction, e.g. for log-space moves
};

struct CoordinateInfo {
  bool fixed = false;      ///< held at its initial value, never proposed
  double prior_sd = 1.0;   ///< prior standard deviation in proposal space
};

template <class P>
concept ExchangeProblem =
    requires(const P& p, typename P::State& s, const typename P::State& cs, Stream& rng,
             std::size_t j, double step) {
      typename P::Sample;
      { p.data_size() } -> std::convertible_to<double>;
      { p.dimension() } -> std::convertible_to<std::size_t>;
      { p.coordinate(j) } -> std::convertible_to<CoordinateInfo>;
      { p.initial_state(rng) } -> std::same_as<typename P::State>;
      { p.propose(s, j, step, rng) } -> std::same_as<Proposal>;
      p.accept(s);
      { p.snapshot(cs) } -> std::convertible_to<typename P::Sample>;
      { p.fresh_loss(cs) } -> std::convertible_to<double>;
      { p.fresh_log_prior(cs) } -> std::convertible_to<double>;
      { cs.loss } -> std::convertible_to<double>;
      { cs.log_prior } -> std::convertible_to<double>;
    };

/// Inverse temperatures β_1 = 0 < β_2 < ... < β_M = 1 with β_m = γ^(m-M).
struct Ladder {
  std::vector<double> betas;
  double gamma = 1.5;

  [[nodiscard]] std::size_t size() const noexcept { return betas.size(); }
  friend bool operator==(const Ladder&, const Ladder&) = default;
};

[[nodiscard]] inline Ladder build_ladder(int M, double gamma) {
  if (M < 2) throw std::invalid_argument("build_ladder: need at least 2 replicas");
  if (!(gamma > 1.0) || !std::isfinite(gamma))
    throw std::invalid_argument("build_ladder: ratio must be finite and > 1");
  Ladder l;
  l.gamma = gamma;
  l.betas.resize(static_cast<std::size_t>(M));
  l.betas[0] = 0.0;
  for (int m = 2; m <= M; ++m) l.betas[static_cast<std::size_t>(m - 1)] = std::pow(gamma, m - M);
  return l;
}

struct SamplerConfig {
  int replicas = 32;
  double gamma = 1.5;
  std::size_t iterations = 20000;
  std::size_t burn_in = 10000;
  std::size_t exchange_period = 1;
  std::uint64_t seed = 1;
  std::size_t thin = 10;
  unsigned threads = 1;
  std::size_t adapt_interval = 100;
  /// Re-derive cached energies every this many sweeps (0 disables).
#ifdef NDEBUG
  std::size_t check_every = 0;
#else
  std::size_t check_every = 1000;
#endif

  void validate() const {
    if (replicas < 2) throw ConfigError("sampler: replicas must be >= 2");
    if (!(gamma > 1.0) || !std::isfinite(gamma)) throw ConfigError("sampler: gamma must be > 1");
    if (iterations == 0) throw ConfigError("sampler: iterations must be > 0");
    if (burn_in >= iterations) throw ConfigError("sampler: burn_in must be < iterations");
    if (exchange_period == 0) throw ConfigError("sampler: exchange_period must be >= 1");
    if (thin == 0) throw ConfigError("sampler: thin must be >= 1");
    if (adapt_interval == 0) throw ConfigError("sampler: adapt_interval must be >= 1");
  }

  [[nodiscard]] std::size_t recorded_per_replica() const noexcept {
    return (iterations - burn_in) / thin;
  }

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

struct Tally {
  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;

  [[nodiscard]] double rate() const noexcept {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
  void add(bool ok) noexcept {
    ++proposed;
    accepted += ok ? 1 : 0;
  }
  friend bool operator==(const Tally&, const Tally&) = default;
};

/// One temperature slot. Exchanges swap `state` between slots; step sizes and
/// tallies belong to the slot.
template <class State>
struct ReplicaState {
  State state;
  std::vector<double> steps;
  std::vector<Tally> totals;
  std::vector<Tally> window;
};

/// Sweep-cadence multiplicative step tuning toward acceptance in [0.2, 0.5].
struct StepAdaptation {
  double factor = 1.2;
  double low = 0.2;
  double high = 0.5;
  double min_scale = 1e-6;
  double max_scale = 1e3;
};

/// Adjust each coordinate's step from its windowed acceptance and clear the
/// window. Steps stay within [min_scale, max_scale] x prior_sd.
template <class State>
void adapt_steps(ReplicaState<State>& r, const std::vector<CoordinateInfo>& coords,
                 const StepAdaptation& rule = {}) {
  for (std::size_t j = 0; j < r.steps.size(); ++j) {
    Tally& w = r.window[j];
    if (w.proposed > 0) {
      const double rate = w.rate();
      if (rate > rule.high)
        r.steps[j] *= rule.factor;
      else if (rate < rule.low)
        r.steps[j] /= rule.factor;
      const double sd = coords[j].prior_sd;
      r.steps[j] = std::clamp(r.steps[j], rule.min_scale * sd, rule.max_scale * sd);
    }
    w = Tally{};
  }
}

/// β·loss − ln prior, with an infinite loss outside the support at every β.
[[nodiscard]] inline double tempered_target(double loss, double log_prior, double beta) noexcept {
  if (!std::isfinite(loss) || !std::isfinite(log_prior)) return kInf;
  return (beta == 0.0 ? 0.0 : beta * loss) - log_prior;
}

/// Metropolis rule on Δ = (target' − target) − log_jacobian.
[[nodiscard]] inline bool metropolis_accept(double delta, Stream& rng) {
  if (std::isnan(delta) || delta == kInf) return false;
  if (delta <= 0.0) return true;
  return rng.uniform() < std::exp(-delta);
}

/// One full sweep of single-coordinate random-walk updates at inverse temperature beta.
template <ExchangeProblem P>
void metropolis_update(const P& problem, ReplicaState<typename P::State>& r, double beta,
                       const std::vector<CoordinateInfo>& coords, Stream& rng) {
  auto& s = r.state;
  for (std::size_t j = 0; j < coords.size(); ++j) {
    if (coords[j].fixed) continue;
    const Proposal q = problem.propose(s, j, r.steps[j], rng);
    const double next = tempered_target(q.loss, q.log_prior, beta);
    bool ok = false;
    if (std::isfinite(next)) {
      const double delta = next - tempered_target(s.loss, s.log_prior, beta) - q.log_jacobian;
      ok = metropolis_accept(delta, rng);
    }
    if (ok) problem.accept(s);
    r.totals[j].add(ok);
    r.window[j].add(ok);
  }
}

/// Swap probability min(1, v) with v = exp(n (β_hi − β_lo)(E_hi − E_lo)).
[[nodiscard]] inline double exchange_acceptance(double n, double beta_lo, double beta_hi,
                                                double energy_lo, double energy_hi) noexcept {
  const double log_v = n * (beta_hi - beta_lo) * (energy_hi - energy_lo);
  return log_v >= 0.0 ? 1.0 : std::exp(log_v);
}

/// Attempt swaps on neighbour pairs (m, m+1) with m ≡ parity (mod 2).
template <class State>
void exchange_sweep(std::vector<ReplicaState<State>>& reps, const Ladder& ladder, int parity,
                    Stream& rng, std::vector<Tally>& pair_tally) {
  if (reps.size() != ladder.size())
    throw std::invalid_argument("exchange_sweep: replica and ladder sizes differ");
  for (std::size_t m = static_cast<std::size_t>(parity & 1); m + 1 < reps.size(); m += 2) {
    // states cache loss = n·E, so n (Δβ)(ΔE) = Δβ Δloss
    const double log_v = (ladder.betas[m + 1] - ladder.betas[m]) *
                         (reps[m + 1].state.loss - reps[m].state.loss);
    const bool ok = log_v >= 0.0 || rng.uniform() < std::exp(log_v);
    if (ok) std::swap(reps[m].state, reps[m + 1].state);
    pair_tally[m].add(ok);
  }
}

/// Post-burn-in recorded chain for one temperature slot.
template <class Sample>
struct ReplicaChain {
  double beta = 0.0;
  std::vector<Sample> samples;
  std::vector<double> energies;  ///< E = loss / n for every recorded sample
  std::vector<double> metropolis_acceptance;  ///< per coordinate, post burn-in
  std::vector<double> final_steps;

  friend bool operator==(const ReplicaChain&, const ReplicaChain&) = default;
};

template <class Sample>
struct ChainRecord {
  double n = 0.0;
  std::vector<ReplicaChain<Sample>> replicas;
  std::vector<double> exchange_acceptance;  ///< pair (m, m+1), post burn-in

  [[nodiscard]] const ReplicaChain<Sample>& posterior() const { return replicas.back(); }
  [[nodiscard]] std::vector<double> betas() const {
    std::vector<double> b;
    for (const auto& r : replicas) b.push_back(r.beta);
    return b;
  }

  friend bool operator==(const ChainRecord&, const ChainRecord&) = default;
};

namespace detail {

template <ExchangeProblem P>
void verify_caches(const P& problem, const typename P::State& s, std::size_t sweep) {
  auto close = [](double cached, double fresh) {
    if (std::isinf(cached) || std::isinf(fresh)) return cached == fresh;
    return std::abs(cached - fresh) <= 1e-10 * std::max(1.0, std::abs(fresh));
  };
  const double fl = problem.fresh_loss(s);
  const double fp = problem.fresh_log_prior(s);
  if (!close(s.loss, fl) || !close(s.log_prior, fp))
    throw NumericError("cached energy drifted at sweep " + std::to_string(sweep) + ": loss " +
                       std::to_string(s.loss) + " vs " + std::to_string(fl) + ", log prior " +
                       std::to_string(s.log_prior) + " vs " + std::to_string(fp));
}

}  // namespace detail

/// Run exchange Monte Carlo. Each replica slot m draws from its own stream
/// derived from (seed, m) and exchanges use a separate stream, so results are
/// identical for any thread count.
template <ExchangeProblem P>
[[nodiscard]] ChainRecord<typename P::Sample> run_emc(const P& problem, const SamplerConfig& cfg) {
  using State = typename P::State;
  cfg.validate();
  const Ladder ladder = build_ladder(cfg.replicas, cfg.gamma);
  const auto M = static_cast<std::size_t>(cfg.replicas);
  const std::size_t dim = problem.dimension();
  const double n = problem.data_size();

  std::vector<CoordinateInfo> coords(dim);
  for (std::size_t j = 0; j < dim; ++j) coords[j] = problem.coordinate(j);

  std::vector<Stream> streams;
  streams.reserve(M);
  for (std::size_t m = 0; m < M; ++m) streams.emplace_back(derive_seed(cfg.seed, {1, m}));
  Stream exchange_rng(derive_seed(cfg.seed, {2}));

  std::vector<ReplicaState<State>> reps;
  reps.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    ReplicaState<State> r{problem.initial_state(streams[m]), {}, {}, {}};
    r.steps.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) r.steps[j] = 0.1 * coords[j].prior_sd;
    r.totals.assign(dim, Tally{});
    r.window.assign(dim, Tally{});
    reps.push_back(std::move(r));
  }

  ChainRecord<typename P::Sample> record;
  record.n = n;
  record.replicas.resize(M);
  const std::size_t keep = cfg.recorded_per_replica();
  for (std::size_t m = 0; m < M; ++m) {
    record.replicas[m].beta = ladder.betas[m];
    record.replicas[m].samples.reserve(keep);
    record.replicas[m].energies.reserve(keep);
  }
  std::vector<Tally> pair_tally(M - 1);
  int parity = 0;

  auto update_replica = [&](std::size_t m, std::size_t sweep) {
    if (sweep == cfg.burn_in) std::fill(reps[m].totals.begin(), reps[m].totals.end(), Tally{});
    metropolis_update(problem, reps[m], ladder.betas[m], coords, streams[m]);
    if (sweep < cfg.burn_in && (sweep + 1) % cfg.adapt_interval == 0) adapt_steps(reps[m], coords);
  };

  // Everything after the per-replica updates of one sweep; single writer.
  auto finish_sweep = [&](std::size_t sweep) {
    if (sweep == cfg.burn_in) std::fill(pair_tally.begin(), pair_tally.end(), Tally{});
    if ((sweep + 1) % cfg.exchange_period == 0) {
      exchange_sweep(reps, ladder, parity, exchange_rng, pair_tally);
      parity ^= 1;
    }
    if (cfg.check_every != 0 && (sweep + 1) % cfg.check_every == 0)
      for (const auto& r : reps) detail::verify_caches(problem, r.state, sweep + 1);
    if (sweep >= cfg.burn_in && (sweep + 1 - cfg.burn_in) % cfg.thin == 0) {
      for (std::size_t m = 0; m < M; ++m) {
        const State& s = reps[m].state;
        if (!std::isfinite(s.loss))
          throw NumericError("non-finite energy recorded at sweep " + std::to_string(sweep + 1));
        record.replicas[m].energies.push_back(s.loss / n);
        record.replicas[m].samples.push_back(problem.snapshot(s));
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(M)));
  if (threads == 1) {
    for (std::size_t sweep = 0; sweep < cfg.iterations; ++sweep) {
      for (std::size_t m = 0; m < M; ++m) update_replica(m, sweep);
      finish_sweep(sweep);
    }
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    bool stop = false;
    std::size_t sweep = 0;
    auto fail = [&](std::exception_ptr e) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = e;
    };
    auto on_barrier = [&]() noexcept {
      {
        std::lock_guard lock(failure_mutex);
        stop = stop || failure != nullptr;
      }
      if (!stop) {
        try {
          finish_sweep(sweep);
        } catch (...) {
          fail(std::current_exception());
          stop = true;
        }
      }
      ++sweep;
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(threads), on_barrier);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t s = 0; s < cfg.iterations; ++s) {
            if (!stop) {
              try {
                for (std::size_t m = t; m < M; m += threads) update_replica(m, s);
              } catch (...) {
                fail(std::current_exception());
              }
            }
            sync.arrive_and_wait();
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  for (std::size_t m = 0; m < M; ++m) {
    auto& rc = record.replicas[m];
    for (const Tally& t : reps[m].totals) rc.metropolis_acceptance.push_back(t.rate());
    rc.final_steps = reps[m].steps;
  }
  for (const Tally& t : pair_tally) record.exchange_acceptance.push_back(t.rate());
  return record;
}

}  // namespace bayespec
