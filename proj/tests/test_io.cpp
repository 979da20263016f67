#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "bayespec/io.hpp"

using namespace bayespec;
using json = nlohmann::json;

namespace {

template <class E>
std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bayespec_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(SpectrumParse, TwoRows) {
  const Spectrum s = parse_spectrum("161.0 5\n161.04 7\n");
  EXPECT_EQ(s.grid[0], 161.0);
  EXPECT_EQ(s.grid[1], 161.04);
  EXPECT_EQ(s.counts, (std::vector<std::int64_t>{5, 7}));
}

TEST(SpectrumParse, CommentsCommasAndBlankLines) {
  const Spectrum s = parse_spectrum("# energy, count\n\n161.0, 5  # first\n161.04,7\r\n\t161.08\t0\n");
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.counts[2], 0);
}

TEST(SpectrumParse, DescendingInputIsSorted) {
  const Spectrum s = parse_spectrum("163.0 1\n162.0 2\n161.0 3\n");
  EXPECT_EQ(s.grid[0], 161.0);
  EXPECT_EQ(s.counts, (std::vector<std::int64_t>{3, 2, 1}));
}

TEST(SpectrumParse, Rejections) {
  auto parse = [](const char* text) { return [text] { (void)parse_spectrum(std::string(text)); }; };
  EXPECT_NE(error_of<DataError>(parse("161.0 5.5")).find("non-integer count at line 1"), std::string::npos);
  EXPECT_NE(error_of<DataError>(parse("161.0 5\n162.0 1\n161.0 2\n")).find("duplicate energy"), std::string::npos);
  EXPECT_NE(error_of<DataError>(parse("161.0 5\n")).find("at least 2"), std::string::npos);
  EXPECT_NE(error_of<DataError>(parse("161.0 5\n162 -1\n")).find("negative count at line 2"), std::string::npos);
  EXPECT_NE(error_of<DataError>(parse("161.0 5 3\n162 1\n")).find("expected 2 columns"), std::string::npos);
  EXPECT_NE(error_of<DataError>(parse("abc 5\n162 1\n")).find("invalid energy"), std::string::npos);
  EXPECT_THROW((void)load_spectrum("/nonexistent/spectrum.txt"), IoError);
}

TEST(SpectrumParse, WriteReadRoundTripIsLossless) {
  Stream rng(3);
  const Spectrum s = simulate_spectrum(synthetic_truth(100.0), rng);
  EXPECT_EQ(parse_spectrum(format_spectrum(s)), s);
  const auto dir = scratch_dir("roundtrip");
  write_spectrum(dir / "s.txt", s);
  EXPECT_EQ(load_spectrum(dir / "s.txt"), s);
}

TEST(Config, EmptyGivesDefaults) {
  const RunConfig c = parse_config(json::object());
  EXPECT_EQ(c.preset, Preset::Synthetic4);
  EXPECT_EQ(c.T, 1.0);
  EXPECT_EQ(c.basis, Basis::Gaussian);
  EXPECT_EQ(c.k_min, 1);
  EXPECT_EQ(c.k_max, 5);
  EXPECT_EQ(c.sampler, SamplerConfig{});
  EXPECT_EQ(c.prior, preset(Preset::Synthetic4, 1.0));
}

TEST(Config, PresetWithT) {
  const RunConfig c = parse_config(json::parse(R"({"preset":"Synthetic4","T":10,"K_range":[1,5]})"));
  EXPECT_EQ(c.prior.lambda_a, 20.0);
  const RunConfig m = parse_config(json::parse(R"({"preset":"MoS2_5","T":400})"));
  EXPECT_EQ(m.basis, Basis::PseudoVoigt7030);
  EXPECT_EQ(m.background, BackgroundKind::Shirley);
  EXPECT_EQ(m.sampler.replicas, 64);
  EXPECT_EQ(m.sampler.gamma, 1.25);
  EXPECT_EQ(std::get<ShirleyBackgroundPrior>(m.prior.background).nu_start, 140.0);
}

TEST(Config, Overrides) {
  const RunConfig c = parse_config(json::parse(R"({
    "T": 100, "prior": {"xi_0": 3.5, "nu_B": 7, "gamma_form": "rate"},
    "sampler": {"replicas": 16, "seed": 18446744073709551615, "iterations": 100, "burn_in": 50},
    "output_dir": "res", "vma": {"T_values": [5, 50], "grid": {"step": 0.08}}})"));
  EXPECT_EQ(c.prior.xi_0, 3.5);
  EXPECT_EQ(std::get<ConstantBackgroundPrior>(c.prior.background).nu_B, 7.0);
  EXPECT_EQ(std::get<ConstantBackgroundPrior>(c.prior.background).xi_B, 1.0);
  EXPECT_EQ(c.prior.gamma_form, GammaForm::Rate);
  EXPECT_EQ(c.sampler.replicas, 16);
  EXPECT_EQ(c.sampler.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.output_dir, "res");
  EXPECT_EQ(c.vma.T_values, (std::vector<double>{5.0, 50.0}));
  EXPECT_EQ(c.vma.grid_step, 0.08);
}

TEST(Config, Rejections) {
  auto bad = [](const char* text) {
    return error_of<ConfigError>([text] { (void)parse_config(json::parse(text)); });
  };
  EXPECT_NE(bad(R"({"K_range":[5,1]})").find("empty K range"), std::string::npos);
  EXPECT_NE(bad(R"({"colour":"red"})").find("unknown key 'colour'"), std::string::npos);
  EXPECT_NE(bad(R"({"sampler":{"sweeps":10}})").find("unknown key 'sweeps'"), std::string::npos);
  EXPECT_NE(bad(R"({"preset":"Other"})").find("unknown preset"), std::string::npos);
  EXPECT_NE(bad(R"({"T":-1})").find("T must be > 0"), std::string::npos);
  EXPECT_NE(bad(R"({"sampler":{"replicas":-3}})").find("nonnegative integer"), std::string::npos);
  EXPECT_NE(bad(R"({"sampler":{"iterations":1.5}})").find("nonnegative integer"), std::string::npos);
  EXPECT_NE(bad(R"({"sampler":{"burn_in":30000}})").find("burn_in"), std::string::npos);
  EXPECT_NE(bad(R"({"prior":{"eta_c":1}})").find("requires the shirley"), std::string::npos);
  EXPECT_NE(bad(R"({"background":"shirley"})").find("needs prior"), std::string::npos);
  EXPECT_NE(bad(R"({"basis":"lorentz"})").find("unknown basis"), std::string::npos);
  EXPECT_NE(bad(R"([1,2])").find("must be a JSON object"), std::string::npos);
}

TEST(Config, EchoRoundTrips) {
  for (const char* text : {R"({})", R"({"preset":"MoS2_5","T":37.5,"K_range":[2,4],"spectrum":"x.txt"})",
                           R"({"background":"shirley","prior":{"eta_c":1,"lambda_c":2,"nu_start":3,"xi_start":4}})"}) {
    const RunConfig c = parse_config(json::parse(text));
    const RunConfig again = parse_config(json::parse(config_to_json(c).dump()));
    EXPECT_EQ(again, c) << text;
  }
}

TEST(Config, LoadAcceptsManifest) {
  const auto dir = scratch_dir("manifest");
  RunConfig c = parse_config(json::parse(R"({"T":10,"sampler":{"seed":9}})"));
  nlohmann::ordered_json m;
  m["manifest_version"] = 1;
  m["config"] = config_to_json(c);
  write_text(dir / "manifest.json", m.dump(2));
  EXPECT_EQ(load_config(dir / "manifest.json"), c);
  write_text(dir / "broken.json", "{ not json");
  EXPECT_THROW((void)load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW((void)load_config(dir / "missing.json"), IoError);
}

TEST(Outputs, FilesAndManifestContents) {
  Stream rng(2);
  RunConfig cfg = parse_config(json::parse(R"({"T":100,"K_range":[1,2],
      "sampler":{"replicas":6,"gamma":3,"iterations":200,"burn_in":100,"thin":5,"seed":4}})"));
  FitReport r;
  r.config = cfg;
  r.spectrum = simulate_spectrum(synthetic_truth(100.0), rng);
  r.scan = scan_models(r.spectrum, cfg.basis, cfg.background, cfg.prior, 1, 2, cfg.sampler);
  const auto dir = scratch_dir("outputs");
  write_outputs(r, dir, 1.5);
  for (const char* f : {"free_energy.csv", "fit_curve.csv", "samples.csv", "histograms.csv", "manifest.json", "timing.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;

  std::ifstream in(dir / "manifest.json");
  const json m = json::parse(in);
  EXPECT_EQ(m["software"]["version"], std::string(kSoftwareVersion));
  EXPECT_EQ(m["results"]["models"].size(), 2u);
  EXPECT_EQ(m["results"]["selected_K"], r.scan.posterior.selected);
  EXPECT_EQ(parse_config(m["config"]), cfg);
  EXPECT_FALSE(m.contains("wall_clock_seconds"));

  const std::string fe = free_energy_csv(r.scan);
  EXPECT_EQ(fe.substr(0, fe.find('\n')), "K,F,mc_se,p_K_given_D");
  const std::string curve = fit_curve_csv(r.spectrum, r.scan.selected());
  std::istringstream lines(curve);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header.rfind("x,y,f,peak_1", 0), 0u);
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), static_cast<long>(r.spectrum.size() + 1));
}

TEST(Outputs, NumberFormattingRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 161.851, 1e-300, 6.02e23})
    EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(kInf), "inf");
}
