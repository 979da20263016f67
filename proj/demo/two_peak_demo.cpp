// Two-peak doublet on a Shirley background, fitted under the MoS2_5 preset.
//
//   two_peak_demo            draw the spectrum and fit K = 1..3
//   two_peak_demo out.txt    also write the drawn spectrum (demo/data/s2p_doublet.txt)

#include <cmath>
#include <cstdio>

#include "bayespec/io.hpp"

using namespace bayespec;

int main(int argc, char** argv) {
  constexpr double T = 100.0;
  TrueModel truth;
  truth.T = T;
  truth.spec = ModelSpec{Basis::PseudoVoigt7030, BackgroundKind::Shirley, 2};
  truth.theta.peaks = {Peak{3.0 * T, 161.90, 1.0 / (0.45 * 0.45)},
                       Peak{1.5 * T, 163.08, 1.0 / (0.45 * 0.45)}};
  truth.theta.background = ShirleyBackground{0.3, 0.35 * T};
  truth.grid = Grid::uniform(157.0, 168.0, 0.05);

  Stream rng(20240611);
  const Spectrum y = simulate_spectrum(truth, rng);
  if (argc > 1) write_spectrum(argv[1], y);

  SamplerConfig cfg;
  const PresetDefaults d = preset_defaults(Preset::MoS2_5);
  cfg.replicas = d.replicas;
  cfg.gamma = d.gamma;
  cfg.iterations = 4000;
  cfg.burn_in = 2000;
  cfg.seed = 7;
  const ScanResult scan =
      scan_models(y, d.basis, d.background, preset(Preset::MoS2_5, T), 1, 3, cfg, false);

  std::printf("K        F    mc_se  p(K|D)\n");
  for (const auto& f : scan.fits)
    std::printf("%d %9.3f %8.3f  %.4f\n", f.spec.K, f.evidence.F, f.evidence.mc_se,
                scan.posterior.probability.at(f.spec.K));
  const Theta& map = scan.selected().map;
  std::printf("selected K=%d\n", scan.posterior.selected);
  for (const Peak& p : map.peaks)
    std::printf("  a=%.1f  mu=%.3f  sigma=%.3f\n", p.amplitude, p.position, 1.0 / std::sqrt(p.shape));
  return 0;
}
