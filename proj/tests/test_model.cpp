#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "bayespec/model.hpp"
#include "bayespec/random.hpp"
#include "bayespec/vma.hpp"

using namespace bayespec;

namespace {

// Composite Simpson on [a, b] with 2m panels.
template <class F>
double simpson(F f, double a, double b, int m = 20000) {
  const double h = (b - a) / (2 * m);
  double s = f(a) + f(b);
  for (int i = 1; i < 2 * m; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

Theta three_peaks(double T) { return synthetic_truth(T).theta; }

const ModelSpec kGauss3{Basis::Gaussian, BackgroundKind::Constant, 3};

}  // namespace

TEST(Basis, ApexAndAnalyticValues) {
  EXPECT_EQ(eval_basis(161.0, Peak{1.0, 161.0, 4.0}, Basis::Gaussian), 1.0);
  EXPECT_EQ(eval_basis(161.0, Peak{1.0, 161.0, 4.0}, Basis::PseudoVoigt7030), 1.0);
  // tau (x-mu)^2 = 1
  EXPECT_NEAR(eval_basis(161.5, Peak{1.0, 161.0, 4.0}, Basis::Gaussian), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(eval_basis(161.5, Peak{1.0, 161.0, 4.0}, Basis::PseudoVoigt7030), 0.4777955272683738,
              1e-15);
}

TEST(Basis, RejectsInvalidInput) {
  EXPECT_THROW((void)eval_basis(1.0, Peak{1.0, 0.0, 0.0}, Basis::Gaussian), std::invalid_argument);
  EXPECT_THROW((void)eval_basis(1.0, Peak{1.0, 0.0, -1.0}, Basis::Gaussian), std::invalid_argument);
  EXPECT_THROW((void)eval_basis(NAN, Peak{1.0, 0.0, 1.0}, Basis::Gaussian), std::invalid_argument);
}

TEST(Basis, UnimodalAndSymmetric) {
  const Peak p{1.0, 0.0, 3.0};
  for (Basis b : {Basis::Gaussian, Basis::PseudoVoigt7030}) {
    double prev = 1.0;
    for (double d = 0.01; d < 5.0; d += 0.01) {
      const double v = eval_basis(d, p, b);
      EXPECT_EQ(v, eval_basis(-d, p, b));
      EXPECT_LE(v, prev);
      EXPECT_GT(v, 0.0);
      prev = v;
    }
  }
}

TEST(Signal, SinglePeakApex) {
  Theta t;
  t.peaks = {Peak{2.0, 160.0, 5.0}};
  EXPECT_EQ(eval_signal(160.0, t, ModelSpec{Basis::Gaussian, BackgroundKind::Constant, 1}), 2.0);
}

TEST(Signal, SyntheticTruthAtSecondPeak) {
  // independent evaluation of the three-Gaussian truth at x = 161.851, T = 1
  EXPECT_NEAR(eval_signal(161.851, three_peaks(1.0), kGauss3), 1.5624216336538312, 1e-12);
  const auto f = eval_model(Grid({161.851, 161.9}), three_peaks(1000.0), kGauss3);
  EXPECT_NEAR(f[0], 1662.4216336538312, 1e-9);
}

TEST(Signal, ZeroAmplitudesGiveZero) {
  Theta t = three_peaks(1.0);
  for (auto& p : t.peaks) p.amplitude = 0.0;
  EXPECT_EQ(eval_signal(161.5, t, kGauss3), 0.0);
  for (double v : cumulative_signal(default_synthetic_grid(), t, kGauss3)) EXPECT_EQ(v, 0.0);
}

TEST(Signal, KMismatchThrows) {
  EXPECT_THROW((void)eval_signal(161.0, three_peaks(1.0), ModelSpec{Basis::Gaussian, BackgroundKind::Constant, 2}),
               std::invalid_argument);
}

TEST(Cumulative, GaussianLimitIsTotalArea) {
  const Theta t = three_peaks(1.0);
  const auto I = cumulative_signal(Grid({100.0, 250.0}), t, kGauss3);
  double area = 0.0;
  for (const Peak& p : t.peaks) area += p.amplitude * std::sqrt(2.0 * std::numbers::pi / p.shape);
  EXPECT_NEAR(I[0], 0.0, 1e-300);
  EXPECT_NEAR(I[1], area, 1e-13);
}

TEST(Cumulative, PseudoVoigtTableMatchesQuadratureOracle) {
  // ∫_{-inf}^{t} exp(-0.3 ln2 u^2) / (1 + 0.7 u^2) du, high-precision values
  const ModelSpec pv{Basis::PseudoVoigt7030, BackgroundKind::Constant, 1};
  Theta t;
  t.peaks = {Peak{1.0, 0.0, 1.0}};
  const auto I = cumulative_signal(Grid({-1.3, 0.7, 60.0}), t, pv);
  EXPECT_NEAR(I[0], 0.209223325401554070686169690412, 1e-10);
  EXPECT_NEAR(I[1], 1.72790283618648475960928003479, 1e-10);
  EXPECT_NEAR(I[2], 2.22783417199380071730706853082, 1e-10);
}

TEST(Cumulative, AgreesWithSimpsonForRandomPeaks) {
  Stream rng(11);
  for (Basis b : {Basis::Gaussian, Basis::PseudoVoigt7030}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Peak p{1.0 + rng.uniform(), 160.0 + 4.0 * rng.uniform(), 0.5 + 30.0 * rng.uniform()};
      const double x = 158.0 + 8.0 * rng.uniform();
      Theta t;
      t.peaks = {p};
      const ModelSpec spec{b, BackgroundKind::Constant, 1};
      const double lo = p.position - 60.0 / std::sqrt(p.shape);
      const double ref = x <= lo ? 0.0
                                 : simpson([&](double u) { return eval_signal(u, t, spec); }, lo, x);
      const double got = cumulative_signal(Grid({x, x + 1.0}), t, spec)[0];
      EXPECT_NEAR(got, ref, 1e-9 * std::max(1.0, ref)) << "basis " << static_cast<int>(b);
    }
  }
}

TEST(Cumulative, NondecreasingInX) {
  Theta t = three_peaks(10.0);
  for (Basis b : {Basis::Gaussian, Basis::PseudoVoigt7030}) {
    const auto I = cumulative_signal(default_synthetic_grid(), t, ModelSpec{b, BackgroundKind::Constant, 3});
    for (std::size_t i = 1; i < I.size(); ++i) EXPECT_GE(I[i], I[i - 1]);
  }
}

TEST(Model, ConstantBackgroundOnly) {
  Theta t;
  t.peaks = {Peak{0.0, 161.0, 10.0}};
  t.background = ConstantBackground{100.0};
  for (double v : eval_model(default_synthetic_grid(), t, ModelSpec{Basis::Gaussian, BackgroundKind::Constant, 1}))
    EXPECT_EQ(v, 100.0);
}

TEST(Model, ShirleyWithZeroCoefficientIsSignalPlusStart) {
  Theta t = three_peaks(5.0);
  t.background = ShirleyBackground{0.0, 3.5};
  const ModelSpec spec{Basis::PseudoVoigt7030, BackgroundKind::Shirley, 3};
  const Grid g = default_synthetic_grid();
  const auto f = eval_model(g, t, spec);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(f[i], eval_signal(g[i], t, spec) + 3.5, 1e-12);
}

TEST(Model, ShirleyStepEqualsCoefficientTimesArea) {
  Theta t = three_peaks(5.0);
  t.background = ShirleyBackground{0.4, 1.0};
  const ModelSpec spec{Basis::Gaussian, BackgroundKind::Shirley, 3};
  const auto f = eval_model(Grid({100.0, 250.0}), t, spec);
  double area = 0.0;
  for (const Peak& p : t.peaks) area += p.amplitude * std::sqrt(2.0 * std::numbers::pi / p.shape);
  EXPECT_NEAR(f[0], 1.0, 1e-12);
  EXPECT_NEAR(f[1] - f[0], 0.4 * area, 1e-10);
}

TEST(Model, ComponentsSumToTotal) {
  Theta t = three_peaks(100.0);
  t.background = ShirleyBackground{0.2, 30.0};
  const ModelSpec spec{Basis::PseudoVoigt7030, BackgroundKind::Shirley, 3};
  const Grid g = default_synthetic_grid();
  const ModelComponents parts = decompose_model(g, t, spec);
  const auto f = eval_model(g, t, spec);
  ASSERT_EQ(parts.peaks.size(), 3u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = parts.background[i];
    for (const auto& p : parts.peaks) s += p[i];
    EXPECT_NEAR(s, f[i], 1e-12 * f[i]);
    EXPECT_NEAR(parts.total[i], f[i], 1e-12 * f[i]);
  }
}

TEST(Model, PermutationInvariant) {
  Theta t = three_peaks(100.0);
  Theta u = t;
  std::swap(u.peaks[0], u.peaks[2]);
  const auto a = eval_model(default_synthetic_grid(), t, kGauss3);
  const auto b = eval_model(default_synthetic_grid(), u, kGauss3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * a[i]);
  EXPECT_EQ(u.sorted_by_position(), t.sorted_by_position());
}

TEST(Grid, Validation) {
  EXPECT_THROW(Grid({1.0}), std::invalid_argument);
  EXPECT_THROW(Grid({1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(Grid({2.0, 1.0}), std::invalid_argument);
  const Grid g = default_synthetic_grid();
  EXPECT_EQ(g.size(), 201u);
  EXPECT_DOUBLE_EQ(g.back(), 166.0);
}

TEST(Coordinates, RoundTrip) {
  Theta t = three_peaks(10.0);
  EXPECT_EQ(from_coordinates(to_coordinates(t), 3, BackgroundKind::Constant), t);
  t.background = ShirleyBackground{0.5, 2.0};
  EXPECT_EQ(from_coordinates(to_coordinates(t), 3, BackgroundKind::Shirley), t);
  EXPECT_EQ(coordinate_count(3, BackgroundKind::Shirley), 11u);
  EXPECT_EQ(coordinate_role(9, 3, BackgroundKind::Shirley), ParamRole::Coefficient);
  EXPECT_EQ(coordinate_role(10, 3, BackgroundKind::Shirley), ParamRole::Start);
  EXPECT_EQ(coordinate_role(4, 3, BackgroundKind::Constant), ParamRole::Position);
  EXPECT_THROW((void)from_coordinates(std::vector<double>(5), 2, BackgroundKind::Constant),
               std::invalid_argument);
}
