#pragma once

// Virtual measurement analytics: simulate Poisson spectra from a known truth
// at several pseudo-measurement times and tabulate which peak count the
// free energy selects.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "bayespec/fit.hpp"
#include "bayespec/parallel.hpp"
#include "bayespec/priors.hpp"

namespace bayespec {

/// Ground truth for synthetic data; amplitudes and background scale with T.
struct TrueModel {
  Theta theta;
  ModelSpec spec;
  double T = 1.0;
  Grid grid;
};

/// Uniform 158-166 eV grid with 0.04 eV spacing (201 points).
[[nodiscard]] inline Grid default_synthetic_grid() { return Grid::uniform(158.0, 166.0, 0.04); }

/// Three Gaussian peaks on a constant background, scaled by T.
[[nodiscard]] inline TrueModel synthetic_truth(double T, Grid grid = default_synthetic_grid()) {
  if (!(T > 0.0)) throw std::invalid_argument("synthetic_truth: T must be > 0");
  constexpr double amplitude[3] = {0.587, 1.522, 1.183};
  constexpr double position[3] = {161.032, 161.851, 162.677};
  constexpr double sigma[3] = {0.341, 0.275, 0.260};
  TrueModel m;
  m.T = T;
  m.spec = ModelSpec{Basis::Gaussian, BackgroundKind::Constant, 3};
  for (int k = 0; k < 3; ++k)
    m.theta.peaks.push_back(Peak{T * amplitude[k], position[k], 1.0 / (sigma[k] * sigma[k])});
  m.theta.background = ConstantBackground{0.1 * T};
  m.grid = std::move(grid);
  return m;
}

/// y_i ~ Poisson(f(x_i; θ*)) independently.
[[nodiscard]] inline Spectrum simulate_spectrum(const TrueModel& truth, Stream& rng) {
  const std::vector<double> f = eval_model(truth.grid, truth.theta, truth.spec);
  std::vector<std::int64_t> y(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] > 0.0) || !std::isfinite(f[i]))
      throw std::invalid_argument("simulate_spectrum: model rate must be > 0 on the grid");
    y[i] = rng.poisson(f[i]);
  }
  return Spectrum(truth.grid, std::move(y));
}

struct VmaConfig {
  std::vector<double> T_values{1000.0, 100.0, 10.0, 1.0};
  int replications = 10;
  int k_min = 1;
  int k_max = 5;
  Preset preset = Preset::Synthetic4;
  GammaForm gamma_form = kPresetGammaForm;
  SamplerConfig sampler;  ///< seed field is ignored; per-run seeds come from master_seed
  std::uint64_t master_seed = 1;
  Grid grid = default_synthetic_grid();
  unsigned threads = 1;  ///< runs executed concurrently
};

struct VmaRun {
  double T = 0.0;
  std::size_t t_index = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  std::map<int, double> F;
  std::map<int, double> mc_se;
  std::map<int, double> probability;
  int selected = 0;  ///< 0 when the run failed
  std::string error;
};

/// Rows are T values, columns candidate K. Failed runs are counted apart, so
/// each row's counts plus failures equal the replication count.
struct SelectionTable {
  std::vector<double> T_values;
  int k_min = 1;
  int k_max = 5;
  int replications = 0;
  std::vector<std::vector<int>> counts;
  std::vector<int> failures;

  [[nodiscard]] int count(std::size_t row, int K) const {
    return counts.at(row).at(static_cast<std::size_t>(K - k_min));
  }
  [[nodiscard]] int row_total(std::size_t row) const {
    int t = failures.at(row);
    for (int c : counts.at(row)) t += c;
    return t;
  }
};

struct VmaResult {
  SelectionTable table;
  std::vector<VmaRun> runs;  ///< ordered by (T index, replication)
};

[[nodiscard]] constexpr std::uint64_t vma_run_seed(std::uint64_t master, std::size_t t_index,
                                                   int replication) noexcept {
  return derive_seed(master, {t_index, static_cast<std::uint64_t>(replication)});
}

/// One VMA run: simulate with the run seed, then scan K.
[[nodiscard]] inline VmaRun run_vma_single(const VmaConfig& cfg, std::size_t t_index, int replication) {
  VmaRun run;
  run.T = cfg.T_values.at(t_index);
  run.t_index = t_index;
  run.replication = replication;
  run.seed = vma_run_seed(cfg.master_seed, t_index, replication);
  try {
    const TrueModel truth = synthetic_truth(run.T, cfg.grid);
    Stream data_rng(derive_seed(run.seed, {0}));
    const Spectrum y = simulate_spectrum(truth, data_rng);
    PriorHyper hyper = preset(cfg.preset, run.T);
    hyper.gamma_form = cfg.gamma_form;
    SamplerConfig sc = cfg.sampler;
    sc.seed = run.seed;
    const PresetDefaults d = preset_defaults(cfg.preset);
    const ScanResult scan =
        scan_models(y, d.basis, d.background, hyper, cfg.k_min, cfg.k_max, sc, false);
    for (const auto& f : scan.fits) {
      run.F[f.spec.K] = f.evidence.F;
      run.mc_se[f.spec.K] = f.evidence.mc_se;
    }
    run.probability = scan.posterior.probability;
    run.selected = scan.posterior.selected;
  } catch (const std::exception& e) {
    run.selected = 0;
    run.error = e.what();
  }
  return run;
}

[[nodiscard]] inline VmaResult run_vma_experiment(
    const VmaConfig& cfg, const std::function<void(const VmaRun&)>& progress = {}) {
  if (cfg.T_values.empty()) throw ConfigError("vma: no T values");
  if (cfg.replications < 1) throw ConfigError("vma: replications must be >= 1");
  if (cfg.k_min < 1 || cfg.k_max < cfg.k_min) throw ConfigError("vma: empty K range");
  cfg.sampler.validate();

  const std::size_t rows = cfg.T_values.size();
  const auto reps = static_cast<std::size_t>(cfg.replications);
  VmaResult out;
  out.runs.resize(rows * reps);
  std::mutex progress_mutex;
  parallel_for(rows * reps, cfg.threads, [&](std::size_t i) {
    out.runs[i] = run_vma_single(cfg, i / reps, static_cast<int>(i % reps));
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(out.runs[i]);
    }
  });

  SelectionTable& t = out.table;
  t.T_values = cfg.T_values;
  t.k_min = cfg.k_min;
  t.k_max = cfg.k_max;
  t.replications = cfg.replications;
  t.counts.assign(rows, std::vector<int>(static_cast<std::size_t>(cfg.k_max - cfg.k_min + 1), 0));
  t.failures.assign(rows, 0);
  for (const VmaRun& r : out.runs) {
    if (r.selected == 0)
      ++t.failures[r.t_index];
    else
      ++t.counts[r.t_index][static_cast<std::size_t>(r.selected - cfg.k_min)];
  }
  return out;
}

}  // namespace bayespec
