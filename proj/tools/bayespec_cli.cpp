// bayespec: command-line front end.
//
//   bayespec fit <spectrum> [--config c.json] [--out dir] [overrides]
//   bayespec evidence <spectrum> [...]        free-energy table only
//   bayespec simulate --T 1000 --seed 7 --out spectrum.txt
//   bayespec vma [--config c.json] [--out dir]
//   bayespec replay <manifest.json> [--out dir]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bayespec/io.hpp"

namespace {

using namespace bayespec;
using json = nlohmann::json;

struct Overrides {
  std::optional<std::string> preset;
  std::optional<double> T;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<double> gamma;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> burn_in;
  std::optional<std::size_t> thin;
  std::optional<int> kmin;
  std::optional<int> kmax;
  std::optional<unsigned> threads;
  std::optional<int> replications;
  std::optional<std::uint64_t> master_seed;
  bool serial = false;
};

void add_sampler_options(CLI::App* app, Overrides& o) {
  app->add_option("--preset", o.preset, "Synthetic4 or MoS2_5");
  app->add_option("--T", o.T, "pseudo-measurement time substituted into the preset");
  app->add_option("--seed", o.seed, "sampler seed");
  app->add_option("--replicas", o.replicas, "number of temperatures M");
  app->add_option("--gamma", o.gamma, "geometric ladder ratio");
  app->add_option("--iterations", o.iterations, "sweeps including burn-in");
  app->add_option("--burn-in", o.burn_in, "burn-in sweeps");
  app->add_option("--thin", o.thin, "record every this many sweeps");
  app->add_option("--kmin", o.kmin, "smallest peak count");
  app->add_option("--kmax", o.kmax, "largest peak count");
  app->add_option("--threads", o.threads, "worker threads (default: BAYESPEC_THREADS or 1)");
  app->add_flag("--serial", o.serial, "force single-threaded execution");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    json j = json::parse(in);
    if (j.is_object() && j.contains("manifest_version")) return j.at("config");
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::optional<unsigned> env_threads() {
  const char* v = std::getenv("BAYESPEC_THREADS");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0' || n == 0) throw ConfigError("BAYESPEC_THREADS must be a positive integer");
  return static_cast<unsigned>(n);
}

/// Config file (or empty) with command-line overrides applied, then validated.
RunConfig build_config(const std::string& config_path, const Overrides& o) {
  json j = config_path.empty() ? json::object() : read_json(config_path);
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  if (o.preset) {
    j["preset"] = *o.preset;
    j.erase("prior");
    j.erase("basis");
    j.erase("background");
  }
  if (o.T) {
    j["T"] = *o.T;
    j.erase("prior");  // preset hyperparameters depend on T
  }
  json& s = j["sampler"];
  if (s.is_null()) s = json::object();
  if (o.seed) s["seed"] = *o.seed;
  if (o.replicas) s["replicas"] = *o.replicas;
  if (o.gamma) s["gamma"] = *o.gamma;
  if (o.iterations) s["iterations"] = *o.iterations;
  if (o.burn_in) s["burn_in"] = *o.burn_in;
  if (o.thin) s["thin"] = *o.thin;
  if (o.threads) {
    s["threads"] = *o.threads;
  } else if (!s.contains("threads")) {
    if (const auto t = env_threads()) s["threads"] = *t;
  }
  if (o.serial) s["threads"] = 1;
  if (o.kmin || o.kmax) {
    int lo = 1;
    int hi = 5;
    if (j.contains("K_range") && j["K_range"].is_array() && j["K_range"].size() == 2) {
      lo = j["K_range"][0].get<int>();
      hi = j["K_range"][1].get<int>();
    }
    j["K_range"] = {o.kmin.value_or(lo), o.kmax.value_or(hi)};
  }
  if (o.replications || o.master_seed) {
    json& v = j["vma"];
    if (v.is_null()) v = json::object();
    if (o.replications) v["replications"] = *o.replications;
    if (o.master_seed) v["master_seed"] = *o.master_seed;
  }
  return parse_config(j);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void run_scan(const std::string& command, RunConfig cfg, const std::string& spectrum_path,
              const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!spectrum_path.empty()) cfg.spectrum = spectrum_path;
  if (cfg.spectrum.empty()) throw ConfigError("no spectrum file given");
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  FitReport report;
  report.command = command;
  report.full = command == "fit";
  report.spectrum = load_spectrum(cfg.spectrum);
  report.config = cfg;

  // Same per-K seeds as scan_models, one K at a time so progress can be shown.
  const auto prior_K = uniform_prior_K(cfg.k_min, cfg.k_max);
  std::map<int, double> F;
  for (int K = cfg.k_min; K <= cfg.k_max; ++K) {
    SamplerConfig sc = cfg.sampler;
    sc.seed = model_seed(cfg.sampler.seed, K);
    const auto tk = std::chrono::steady_clock::now();
    report.scan.fits.push_back(fit_model(report.spectrum, ModelSpec{cfg.basis, cfg.background, K},
                                         cfg.prior, sc, report.full));
    const auto& ev = report.scan.fits.back().evidence;
    F[K] = ev.F;
    std::fprintf(stderr, "K=%d  F=%.4f  mc_se=%.4f  (%.1f s)\n", K, ev.F, ev.mc_se, seconds_since(tk));
  }
  report.scan.posterior = posterior_over_K(F, prior_K);
  if (report.full) {
    // only the selected model's chains are written
    for (auto& f : report.scan.fits)
      if (f.spec.K != report.scan.posterior.selected) f.chains.reset();
  }
  write_outputs(report, cfg.output_dir, seconds_since(t0));
  std::fprintf(stderr, "selected K=%d  p=%.4f  -> %s\n", report.scan.posterior.selected,
               report.scan.posterior.probability.at(report.scan.posterior.selected),
               cfg.output_dir.c_str());
}

void run_vma(RunConfig cfg, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const VmaResult r = run_vma_experiment(cfg.vma_config(), [](const VmaRun& run) {
    if (run.selected == 0)
      std::fprintf(stderr, "T=%g rep=%d failed: %s\n", run.T, run.replication, run.error.c_str());
    else
      std::fprintf(stderr, "T=%g rep=%d selected K=%d\n", run.T, run.replication, run.selected);
  });
  write_vma_outputs(cfg, r, cfg.output_dir, seconds_since(t0));
  std::cout << selection_table_csv(r.table);
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian spectral deconvolution with exchange Monte Carlo"};
  app.set_version_flag("--version", std::string(kSoftwareVersion));
  app.require_subcommand(1);

  Overrides fit_o;
  std::string fit_spectrum, fit_config, fit_out;
  auto* fit = app.add_subcommand("fit", "scan K, select by free energy, write fit outputs");
  fit->add_option("spectrum", fit_spectrum, "two-column spectrum file (energy, count)")->required();
  fit->add_option("--config", fit_config, "JSON configuration or a previous manifest");
  fit->add_option("--out", fit_out, "output directory");
  add_sampler_options(fit, fit_o);

  Overrides ev_o;
  std::string ev_spectrum, ev_config, ev_out;
  auto* evidence = app.add_subcommand("evidence", "free energy per K and p(K|D) only");
  evidence->add_option("spectrum", ev_spectrum, "two-column spectrum file")->required();
  evidence->add_option("--config", ev_config, "JSON configuration");
  evidence->add_option("--out", ev_out, "output directory");
  add_sampler_options(evidence, ev_o);

  double sim_T = 1000.0;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "draw a synthetic three-peak spectrum");
  simulate->add_option("--T", sim_T, "pseudo-measurement time")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "random seed");
  simulate->add_option("--out", sim_out, "output file (default: stdout)");

  Overrides vma_o;
  std::string vma_config, vma_out;
  auto* vma = app.add_subcommand("vma", "repeated simulate-and-select experiment");
  vma->add_option("--config", vma_config, "JSON configuration");
  vma->add_option("--out", vma_out, "output directory");
  vma->add_option("--replications", vma_o.replications, "runs per T");
  vma->add_option("--master-seed", vma_o.master_seed, "seed for all runs");
  add_sampler_options(vma, vma_o);

  std::string replay_manifest, replay_out;
  auto* replay = app.add_subcommand("replay", "re-run the job recorded in a manifest, serially");
  replay->add_option("manifest", replay_manifest, "manifest.json from a previous run")->required();
  replay->add_option("--out", replay_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::Config);
  }

  try {
    if (*fit) {
      run_scan("fit", build_config(fit_config, fit_o), fit_spectrum, fit_out);
    } else if (*evidence) {
      run_scan("evidence", build_config(ev_config, ev_o), ev_spectrum, ev_out);
    } else if (*simulate) {
      Stream rng(sim_seed);
      const Spectrum y = simulate_spectrum(synthetic_truth(sim_T), rng);
      if (sim_out.empty())
        std::cout << format_spectrum(y);
      else
        write_spectrum(sim_out, y);
    } else if (*vma) {
      run_vma(build_config(vma_config, vma_o), vma_out);
    } else if (*replay) {
      std::ifstream in(replay_manifest);
      if (!in) throw IoError("cannot open " + replay_manifest);
      json m;
      try {
        m = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(replay_manifest + ": " + e.what());
      }
      if (!m.is_object() || !m.contains("command") || !m.contains("config"))
        throw ConfigError(replay_manifest + ": not a run manifest");
      RunConfig cfg = parse_config(m.at("config"));
      cfg.sampler.threads = 1;
      const std::string command = m.at("command").get<std::string>();
      if (command == "vma")
        run_vma(cfg, replay_out);
      else if (command == "fit" || command == "evidence")
        run_scan(command, cfg, "", replay_out);
      else
        throw ConfigError("manifest has unknown command '" + command + "'");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Failure);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
