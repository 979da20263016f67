#pragma once

// Spectrum files, run configuration and result files.
//
// Spectrum files are two-column text (energy, count), separated by
// whitespace or commas, with '#' starting a comment. Counts must be raw
// detector counts (nonnegative integers), not rates.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bayespec/error.hpp"
#include "bayespec/fit.hpp"
#include "bayespec/likelihood.hpp"
#include "bayespec/priors.hpp"
#include "bayespec/vma.hpp"

namespace bayespec {

inline constexpr std::string_view kSoftwareName = "bayespec";
inline constexpr std::string_view kSoftwareVersion = "0.1.0";

/// Shortest round-trip decimal representation.
[[nodiscard]] inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

[[nodiscard]] inline std::string format_number(std::int64_t v) { return std::to_string(v); }

// ---------------------------------------------------------------------------
// Spectrum files

namespace detail {

[[nodiscard]] inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto sep = [](char c) { return c == ' ' || c == '\t' || c == ',' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !sep(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

[[nodiscard]] inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace detail

/// Parse spectrum text. Rows are sorted by ascending energy on load.
[[nodiscard]] inline Spectrum parse_spectrum(std::istream& in, const std::string& source = "<input>") {
  struct Row {
    double x;
    std::int64_t y;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(source + ": " + what + " at line " + std::to_string(line_no));
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto fields = detail::split_fields(view);
    if (fields.empty()) continue;
    if (fields.size() != 2) fail("expected 2 columns (energy, count), found " + std::to_string(fields.size()));
    double x = 0.0;
    if (!detail::parse_double(fields[0], x) || !std::isfinite(x)) fail("invalid energy '" + std::string(fields[0]) + "'");
    double yv = 0.0;
    if (!detail::parse_double(fields[1], yv) || !std::isfinite(yv)) fail("invalid count '" + std::string(fields[1]) + "'");
    if (yv != std::floor(yv)) fail("non-integer count");
    if (yv < 0.0) fail("negative count");
    if (yv > 9.0e15) fail("count too large");
    rows.push_back({x, static_cast<std::int64_t>(yv), line_no});
  }
  if (rows.size() < 2)
    throw DataError(source + ": need at least 2 data rows, found " + std::to_string(rows.size()));
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.x < b.x; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].x == rows[i - 1].x)
      throw DataError(source + ": duplicate energy " + format_number(rows[i].x) + " at lines " +
                      std::to_string(std::min(rows[i - 1].line, rows[i].line)) + " and " +
                      std::to_string(std::max(rows[i - 1].line, rows[i].line)));
  std::vector<double> x;
  std::vector<std::int64_t> y;
  for (const Row& r : rows) {
    x.push_back(r.x);
    y.push_back(r.y);
  }
  return Spectrum(Grid(std::move(x)), std::move(y));
}

[[nodiscard]] inline Spectrum parse_spectrum(const std::string& text) {
  std::istringstream in(text);
  return parse_spectrum(in);
}

[[nodiscard]] inline Spectrum load_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spectrum file " + path.string());
  return parse_spectrum(in, path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

[[nodiscard]] inline std::string format_spectrum(const Spectrum& s) {
  std::string text = "# energy count\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    text += format_number(s.grid[i]) + " " + std::to_string(s.counts[i]) + "\n";
  return text;
}

inline void write_spectrum(const std::filesystem::path& path, const Spectrum& s) {
  write_text(path, format_spectrum(s));
}

// ---------------------------------------------------------------------------
// Run configuration

struct VmaSettings {
  std::vector<double> T_values{1000.0, 100.0, 10.0, 1.0};
  int replications = 10;
  double grid_start = 158.0;
  double grid_stop = 166.0;
  double grid_step = 0.04;
  std::uint64_t master_seed = 1;

  friend bool operator==(const VmaSettings&, const VmaSettings&) = default;
};

struct RunConfig {
  Preset preset = Preset::Synthetic4;
  double T = 1.0;
  Basis basis = Basis::Gaussian;
  BackgroundKind background = BackgroundKind::Constant;
  PriorHyper prior = bayespec::preset(Preset::Synthetic4, 1.0);
  SamplerConfig sampler;
  int k_min = 1;
  int k_max = 5;
  std::string output_dir = "out";
  std::string spectrum;  ///< optional; recorded by fit runs for replay
  VmaSettings vma;

  [[nodiscard]] VmaConfig vma_config() const {
    VmaConfig v;
    v.T_values = vma.T_values;
    v.replications = vma.replications;
    v.k_min = k_min;
    v.k_max = k_max;
    v.preset = preset;
    v.gamma_form = prior.gamma_form;
    v.sampler = sampler;
    v.master_seed = vma.master_seed;
    v.grid = Grid::uniform(vma.grid_start, vma.grid_stop, vma.grid_step);
    v.threads = sampler.threads;
    v.sampler.threads = 1;
    return v;
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

[[nodiscard]] inline std::string_view basis_name(Basis b) noexcept {
  return b == Basis::Gaussian ? "gaussian" : "pseudo_voigt";
}
[[nodiscard]] inline std::string_view background_name(BackgroundKind b) noexcept {
  return b == BackgroundKind::Constant ? "constant" : "shirley";
}
[[nodiscard]] inline std::string_view gamma_form_name(GammaForm f) noexcept {
  return f == GammaForm::Rate ? "rate" : "scale";
}

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

[[nodiscard]] inline double get_number(const json& j, const char* key, std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string(where) + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(std::string(where) + "." + key + " must be finite");
  return d;
}

[[nodiscard]] inline std::uint64_t get_unsigned(const json& j, const char* key, std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(std::string(where) + "." + key + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

[[nodiscard]] inline Basis parse_basis(std::string_view s) {
  if (s == "gaussian") return Basis::Gaussian;
  if (s == "pseudo_voigt") return Basis::PseudoVoigt7030;
  throw ConfigError("unknown basis '" + std::string(s) + "' (expected gaussian or pseudo_voigt)");
}

[[nodiscard]] inline BackgroundKind parse_background(std::string_view s) {
  if (s == "constant") return BackgroundKind::Constant;
  if (s == "shirley") return BackgroundKind::Shirley;
  throw ConfigError("unknown background '" + std::string(s) + "' (expected constant or shirley)");
}

[[nodiscard]] inline GammaForm parse_gamma_form(std::string_view s) {
  if (s == "rate") return GammaForm::Rate;
  if (s == "scale") return GammaForm::Scale;
  throw ConfigError("unknown gamma_form '" + std::string(s) + "' (expected rate or scale)");
}

[[nodiscard]] inline std::string get_string(const json& j, const char* key, std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(std::string(where) + "." + key + " must be a string");
  return v.get<std::string>();
}

inline void parse_prior(const json& j, RunConfig& c) {
  check_keys(j, "prior",
             {"gamma_form", "eta_a", "lambda_a", "nu_0", "xi_0", "eta_sigma", "lambda_sigma", "nu_B",
              "xi_B", "eta_c", "lambda_c", "nu_start", "xi_start"});
  PriorHyper& h = c.prior;
  if (j.contains("gamma_form"))
    h.gamma_form = parse_gamma_form(get_string(j, "gamma_form", "prior"));
  auto set = [&](const char* key, double& field) {
    if (j.contains(key)) field = get_number(j, key, "prior");
  };
  set("eta_a", h.eta_a);
  set("lambda_a", h.lambda_a);
  set("nu_0", h.nu_0);
  set("xi_0", h.xi_0);
  set("eta_sigma", h.eta_sigma);
  set("lambda_sigma", h.lambda_sigma);
  if (c.background == BackgroundKind::Constant) {
    for (const char* k : {"eta_c", "lambda_c", "nu_start", "xi_start"})
      if (j.contains(k)) throw ConfigError(std::string("prior.") + k + " requires the shirley background");
    if (auto* b = std::get_if<ConstantBackgroundPrior>(&h.background)) {
      set("nu_B", b->nu_B);
      set("xi_B", b->xi_B);
    } else {
      if (!j.contains("nu_B") || !j.contains("xi_B"))
        throw ConfigError("constant background with this preset needs prior.nu_B and prior.xi_B");
      h.background = ConstantBackgroundPrior{get_number(j, "nu_B", "prior"), get_number(j, "xi_B", "prior")};
    }
  } else {
    for (const char* k : {"nu_B", "xi_B"})
      if (j.contains(k)) throw ConfigError(std::string("prior.") + k + " requires the constant background");
    if (auto* b = std::get_if<ShirleyBackgroundPrior>(&h.background)) {
      set("eta_c", b->eta_c);
      set("lambda_c", b->lambda_c);
      set("nu_start", b->nu_start);
      set("xi_start", b->xi_start);
    } else {
      for (const char* k : {"eta_c", "lambda_c", "nu_start", "xi_start"})
        if (!j.contains(k))
          throw ConfigError("shirley background with this preset needs prior." + std::string(k));
      h.background = ShirleyBackgroundPrior{
          get_number(j, "eta_c", "prior"), get_number(j, "lambda_c", "prior"),
          get_number(j, "nu_start", "prior"), get_number(j, "xi_start", "prior")};
    }
  }
}

inline void parse_sampler(const json& j, SamplerConfig& s) {
  check_keys(j, "sampler",
             {"replicas", "gamma", "iterations", "burn_in", "exchange_period", "seed", "thin",
              "threads", "adapt_interval"});
  if (j.contains("replicas")) s.replicas = static_cast<int>(get_unsigned(j, "replicas", "sampler"));
  if (j.contains("gamma")) s.gamma = get_number(j, "gamma", "sampler");
  if (j.contains("iterations")) s.iterations = get_unsigned(j, "iterations", "sampler");
  if (j.contains("burn_in")) s.burn_in = get_unsigned(j, "burn_in", "sampler");
  if (j.contains("exchange_period")) s.exchange_period = get_unsigned(j, "exchange_period", "sampler");
  if (j.contains("seed")) s.seed = get_unsigned(j, "seed", "sampler");
  if (j.contains("thin")) s.thin = get_unsigned(j, "thin", "sampler");
  if (j.contains("threads")) s.threads = static_cast<unsigned>(get_unsigned(j, "threads", "sampler"));
  if (j.contains("adapt_interval")) s.adapt_interval = get_unsigned(j, "adapt_interval", "sampler");
}

inline void parse_vma(const json& j, VmaSettings& v) {
  check_keys(j, "vma", {"T_values", "replications", "grid", "master_seed"});
  if (j.contains("T_values")) {
    const json& t = j.at("T_values");
    if (!t.is_array() || t.empty()) throw ConfigError("vma.T_values must be a non-empty array");
    v.T_values.clear();
    for (const json& e : t) {
      if (!e.is_number() || !(e.get<double>() > 0.0))
        throw ConfigError("vma.T_values entries must be positive numbers");
      v.T_values.push_back(e.get<double>());
    }
  }
  if (j.contains("replications"))
    v.replications = static_cast<int>(get_unsigned(j, "replications", "vma"));
  if (j.contains("master_seed")) v.master_seed = get_unsigned(j, "master_seed", "vma");
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, "vma.grid", {"start", "stop", "step"});
    if (g.contains("start")) v.grid_start = get_number(g, "start", "vma.grid");
    if (g.contains("stop")) v.grid_stop = get_number(g, "stop", "vma.grid");
    if (g.contains("step")) v.grid_step = get_number(g, "step", "vma.grid");
  }
}

}  // namespace detail

/// Build the effective configuration. Unspecified fields take the preset's
/// values; unknown keys are rejected.
[[nodiscard]] inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::check_keys;
  try {
    check_keys(j, "config",
               {"preset", "T", "basis", "background", "K_range", "prior", "sampler", "output_dir",
                "spectrum", "vma"});
    RunConfig c;
    if (j.contains("preset")) c.preset = parse_preset(detail::get_string(j, "preset", "config"));
    if (j.contains("T")) c.T = detail::get_number(j, "T", "config");
    if (!(c.T > 0.0)) throw ConfigError("config.T must be > 0");
    const PresetDefaults d = preset_defaults(c.preset);
    c.basis = j.contains("basis") ? detail::parse_basis(detail::get_string(j, "basis", "config")) : d.basis;
    c.background = j.contains("background")
                       ? detail::parse_background(detail::get_string(j, "background", "config"))
                       : d.background;
    c.prior = preset(c.preset, c.T);
    if (j.contains("prior")) {
      detail::parse_prior(j.at("prior"), c);
    } else if (c.prior.background_kind() != c.background) {
      detail::parse_prior(nlohmann::json::object(), c);
    }
    c.prior.validate();

    c.sampler = SamplerConfig{};
    c.sampler.replicas = d.replicas;
    c.sampler.gamma = d.gamma;
    if (j.contains("sampler")) detail::parse_sampler(j.at("sampler"), c.sampler);
    c.sampler.validate();

    if (j.contains("K_range")) {
      const auto& r = j.at("K_range");
      if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
        throw ConfigError("K_range must be an array of two integers");
      c.k_min = r[0].get<int>();
      c.k_max = r[1].get<int>();
    }
    if (c.k_min > c.k_max) throw ConfigError("empty K range");
    if (c.k_min < 1) throw ConfigError("K_range must start at 1 or more");

    if (j.contains("output_dir")) c.output_dir = detail::get_string(j, "output_dir", "config");
    if (j.contains("spectrum")) c.spectrum = detail::get_string(j, "spectrum", "config");
    if (j.contains("vma")) detail::parse_vma(j.at("vma"), c.vma);
    if (c.vma.replications < 1) throw ConfigError("vma.replications must be >= 1");
    if (!(c.vma.grid_step > 0.0) || !(c.vma.grid_stop > c.vma.grid_start))
      throw ConfigError("vma.grid needs stop > start and step > 0");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

/// Fully explicit configuration; parse_config(config_to_json(c)) == c.
[[nodiscard]] inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = preset_name(c.preset);
  j["T"] = c.T;
  j["basis"] = basis_name(c.basis);
  j["background"] = background_name(c.background);
  j["K_range"] = {c.k_min, c.k_max};
  nlohmann::ordered_json p;
  p["gamma_form"] = gamma_form_name(c.prior.gamma_form);
  p["eta_a"] = c.prior.eta_a;
  p["lambda_a"] = c.prior.lambda_a;
  p["nu_0"] = c.prior.nu_0;
  p["xi_0"] = c.prior.xi_0;
  p["eta_sigma"] = c.prior.eta_sigma;
  p["lambda_sigma"] = c.prior.lambda_sigma;
  if (const auto* b = std::get_if<ConstantBackgroundPrior>(&c.prior.background)) {
    p["nu_B"] = b->nu_B;
    p["xi_B"] = b->xi_B;
  } else {
    const auto& s = std::get<ShirleyBackgroundPrior>(c.prior.background);
    p["eta_c"] = s.eta_c;
    p["lambda_c"] = s.lambda_c;
    p["nu_start"] = s.nu_start;
    p["xi_start"] = s.xi_start;
  }
  j["prior"] = p;
  nlohmann::ordered_json s;
  s["replicas"] = c.sampler.replicas;
  s["gamma"] = c.sampler.gamma;
  s["iterations"] = c.sampler.iterations;
  s["burn_in"] = c.sampler.burn_in;
  s["exchange_period"] = c.sampler.exchange_period;
  s["seed"] = c.sampler.seed;
  s["thin"] = c.sampler.thin;
  s["threads"] = c.sampler.threads;
  s["adapt_interval"] = c.sampler.adapt_interval;
  j["sampler"] = s;
  j["output_dir"] = c.output_dir;
  if (!c.spectrum.empty()) j["spectrum"] = c.spectrum;
  nlohmann::ordered_json v;
  v["T_values"] = c.vma.T_values;
  v["replications"] = c.vma.replications;
  v["grid"] = {{"start", c.vma.grid_start}, {"stop", c.vma.grid_stop}, {"step", c.vma.grid_step}};
  v["master_seed"] = c.vma.master_seed;
  j["vma"] = v;
  return j;
}

/// Load a configuration file. A run manifest is also accepted, in which case
/// its embedded configuration is used.
[[nodiscard]] inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("manifest_version")) {
    if (!j.contains("config")) throw ConfigError(path.string() + ": manifest has no config");
    return parse_config(j.at("config"));
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Results

namespace detail {

[[nodiscard]] inline nlohmann::ordered_json theta_to_json(const Theta& t) {
  nlohmann::ordered_json j;
  j["peaks"] = nlohmann::ordered_json::array();
  for (const Peak& p : t.peaks)
    j["peaks"].push_back({{"amplitude", p.amplitude}, {"position", p.position}, {"shape", p.shape}});
  if (const auto* b = std::get_if<ConstantBackground>(&t.background)) {
    j["background"] = {{"kind", "constant"}, {"level", b->level}};
  } else {
    const auto& s = std::get<ShirleyBackground>(t.background);
    j["background"] = {{"kind", "shirley"}, {"coefficient", s.coefficient}, {"start", s.start}};
  }
  return j;
}

[[nodiscard]] inline nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

[[nodiscard]] inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

/// Everything a fit/evidence run reports.
struct FitReport {
  std::string command = "fit";
  RunConfig config;
  Spectrum spectrum;
  ScanResult scan;
  bool full = true;  ///< false: evidence table and manifest only
};

[[nodiscard]] inline std::string free_energy_csv(const ScanResult& scan) {
  std::string s = "K,F,mc_se,p_K_given_D\n";
  for (const auto& f : scan.fits)
    s += std::to_string(f.spec.K) + "," + format_number(f.evidence.F) + "," +
         format_number(f.evidence.mc_se) + "," + format_number(scan.posterior.probability.at(f.spec.K)) +
         "\n";
  return s;
}

[[nodiscard]] inline std::string fit_curve_csv(const Spectrum& y, const FitResult& fit) {
  const ModelComponents parts = decompose_model(y.grid, fit.map, fit.spec);
  std::string s = "x,y,f";
  for (std::size_t k = 0; k < parts.peaks.size(); ++k) s += ",peak_" + std::to_string(k + 1);
  s += ",background\n";
  for (std::size_t i = 0; i < y.size(); ++i) {
    s += format_number(y.grid[i]) + "," + std::to_string(y.counts[i]) + "," + format_number(parts.total[i]);
    for (const auto& p : parts.peaks) s += "," + format_number(p[i]);
    s += "," + format_number(parts.background[i]) + "\n";
  }
  return s;
}

[[nodiscard]] inline std::string samples_csv(const FitResult& fit) {
  const auto& post = fit.chains.value().posterior();
  std::string s = "index,E";
  for (int k = 1; k <= fit.spec.K; ++k) {
    const auto ks = std::to_string(k);
    s += ",a_" + ks + ",mu_" + ks + ",tau_" + ks;
  }
  s += fit.spec.background == BackgroundKind::Constant ? ",B\n" : ",c,h_start\n";
  for (std::size_t t = 0; t < post.samples.size(); ++t) {
    s += std::to_string(t) + "," + format_number(post.energies[t]);
    for (double v : to_coordinates(post.samples[t].sorted_by_position())) s += "," + format_number(v);
    s += "\n";
  }
  return s;
}

[[nodiscard]] inline std::string histograms_csv(const std::vector<PeakHistogram>& hists) {
  std::string s = "peak,bin_low,bin_high,count\n";
  for (std::size_t k = 0; k < hists.size(); ++k)
    for (std::size_t b = 0; b < hists[k].counts.size(); ++b)
      s += std::to_string(k + 1) + "," + format_number(hists[k].edges[b]) + "," +
           format_number(hists[k].edges[b + 1]) + "," + std::to_string(hists[k].counts[b]) + "\n";
  return s;
}

[[nodiscard]] inline nlohmann::ordered_json fit_manifest(const FitReport& r,
                                                         const std::vector<PeakHistogram>* hists) {
  nlohmann::ordered_json m;
  m["manifest_version"] = 1;
  m["software"] = {{"name", kSoftwareName}, {"version", kSoftwareVersion}};
  m["command"] = r.command;
  m["spectrum"] = r.config.spectrum;
  m["n"] = r.spectrum.size();
  m["seed"] = r.config.sampler.seed;
  m["config"] = config_to_json(r.config);
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (const auto& f : r.scan.fits) {
    nlohmann::ordered_json e;
    e["K"] = f.spec.K;
    e["seed"] = f.seed;
    e["F"] = detail::number_or_null(f.evidence.F);
    e["mc_se"] = detail::number_or_null(f.evidence.mc_se);
    e["p_K_given_D"] = r.scan.posterior.probability.at(f.spec.K);
    e["map"] = detail::theta_to_json(f.map);
    e["exchange_acceptance"] = f.exchange_acceptance;
    e["posterior_acceptance"] = f.posterior_acceptance;
    models.push_back(e);
  }
  nlohmann::ordered_json res;
  res["models"] = models;
  res["selected_K"] = r.scan.posterior.selected;
  res["map_theta"] = detail::theta_to_json(r.scan.selected().map);
  if (hists) {
    nlohmann::ordered_json ci = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < hists->size(); ++k)
      ci.push_back({{"peak", k + 1},
                    {"position_mean", (*hists)[k].mean},
                    {"ci_low", (*hists)[k].ci_low},
                    {"ci_high", (*hists)[k].ci_high}});
    res["position_credible_intervals_95"] = ci;
  }
  m["results"] = res;
  return m;
}

/// Write the run's result files into `dir` (created if needed). Wall-clock
/// time goes to timing.json so the other files are reproducible byte for byte.
inline void write_outputs(const FitReport& r, const std::filesystem::path& dir, double wall_seconds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / "free_energy.csv", free_energy_csv(r.scan));
  std::vector<PeakHistogram> hists;
  if (r.full) {
    const FitResult& best = r.scan.selected();
    if (!best.chains) throw std::invalid_argument("write_outputs: selected fit has no chains");
    hists = posterior_histograms(*best.chains, PeakParameter::Position);
    write_text(dir / "fit_curve.csv", fit_curve_csv(r.spectrum, best));
    write_text(dir / "samples.csv", samples_csv(best));
    write_text(dir / "histograms.csv", histograms_csv(hists));
  }
  write_text(dir / "manifest.json", detail::dump(fit_manifest(r, r.full ? &hists : nullptr)));
  write_text(dir / "timing.json",
             detail::dump(nlohmann::ordered_json{{"wall_clock_seconds", wall_seconds}}));
}

[[nodiscard]] inline std::string selection_table_csv(const SelectionTable& t) {
  std::string s = "T";
  for (int K = t.k_min; K <= t.k_max; ++K) s += ",K=" + std::to_string(K);
  s += ",failed,replications\n";
  for (std::size_t row = 0; row < t.T_values.size(); ++row) {
    s += format_number(t.T_values[row]);
    for (int c : t.counts[row]) s += "," + std::to_string(c);
    s += "," + std::to_string(t.failures[row]) + "," + std::to_string(t.replications) + "\n";
  }
  return s;
}

[[nodiscard]] inline nlohmann::ordered_json vma_manifest(const RunConfig& config, const VmaResult& r) {
  nlohmann::ordered_json m;
  m["manifest_version"] = 1;
  m["software"] = {{"name", kSoftwareName}, {"version", kSoftwareVersion}};
  m["command"] = "vma";
  m["config"] = config_to_json(config);
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const VmaRun& run : r.runs) {
    nlohmann::ordered_json e;
    e["T"] = run.T;
    e["replication"] = run.replication;
    e["seed"] = run.seed;
    nlohmann::ordered_json f = nlohmann::ordered_json::object();
    for (const auto& [K, v] : run.F) f[std::to_string(K)] = detail::number_or_null(v);
    e["F"] = f;
    nlohmann::ordered_json se = nlohmann::ordered_json::object();
    for (const auto& [K, v] : run.mc_se) se[std::to_string(K)] = detail::number_or_null(v);
    e["mc_se"] = se;
    e["selected_K"] = run.selected == 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(run.selected);
    if (!run.error.empty()) e["error"] = run.error;
    runs.push_back(e);
  }
  m["runs"] = runs;
  return m;
}

inline void write_vma_outputs(const RunConfig& config, const VmaResult& r,
                              const std::filesystem::path& dir, double wall_seconds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / "selection_table.csv", selection_table_csv(r.table));
  write_text(dir / "manifest.json", detail::dump(vma_manifest(config, r)));
  write_text(dir / "timing.json",
             detail::dump(nlohmann::ordered_json{{"wall_clock_seconds", wall_seconds}}));
}

}  // namespace bayespec
