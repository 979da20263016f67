#include <gtest/gtest.h>

#include <cmath>

#include "bayespec/vma.hpp"

using namespace bayespec;

TEST(Synthetic, TruthMatchesPublishedParameters) {
  const TrueModel m = synthetic_truth(1000.0);
  ASSERT_EQ(m.theta.K(), 3u);
  EXPECT_EQ(m.theta.peaks[0].amplitude, 587.0);
  EXPECT_EQ(m.theta.peaks[1].position, 161.851);
  EXPECT_NEAR(1.0 / std::sqrt(m.theta.peaks[2].shape), 0.260, 1e-15);
  EXPECT_EQ(std::get<ConstantBackground>(m.theta.background).level, 100.0);
  EXPECT_EQ(m.grid.size(), 201u);
}

TEST(Synthetic, SimulationIsSeededAndUnbiased) {
  const TrueModel m = synthetic_truth(100.0);
  Stream a(5), b(5);
  EXPECT_EQ(simulate_spectrum(m, a), simulate_spectrum(m, b));
  const auto f = eval_model(m.grid, m.theta, m.spec);
  double total_f = 0.0;
  for (double v : f) total_f += v;
  Stream rng(6);
  double total_y = 0.0;
  constexpr int kReps = 200;
  for (int r = 0; r < kReps; ++r)
    for (auto y : simulate_spectrum(m, rng).counts) total_y += static_cast<double>(y);
  // sum of counts is Poisson(kReps * total_f)
  EXPECT_NEAR(total_y / kReps, total_f, 4.0 * std::sqrt(total_f / kReps));
}

TEST(Vma, SeedsAreDistinctPerRun) {
  EXPECT_NE(vma_run_seed(1, 0, 0), vma_run_seed(1, 0, 1));
  EXPECT_NE(vma_run_seed(1, 0, 1), vma_run_seed(1, 1, 0));
}

TEST(Vma, SmallExperimentTableAndDeterminism) {
  VmaConfig cfg;
  cfg.T_values = {1000.0, 1.0};
  cfg.replications = 2;
  cfg.k_min = 2;
  cfg.k_max = 3;
  cfg.sampler.replicas = 8;
  cfg.sampler.gamma = 2.5;
  cfg.sampler.iterations = 300;
  cfg.sampler.burn_in = 150;
  cfg.sampler.thin = 5;
  cfg.master_seed = 3;
  const VmaResult a = run_vma_experiment(cfg);
  ASSERT_EQ(a.runs.size(), 4u);
  EXPECT_EQ(a.table.counts.size(), 2u);
  for (std::size_t row = 0; row < 2; ++row) EXPECT_EQ(a.table.row_total(row), 2);
  cfg.threads = 3;
  const VmaResult b = run_vma_experiment(cfg);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].F, b.runs[i].F);
    EXPECT_EQ(a.runs[i].selected, b.runs[i].selected);
  }
}

TEST(Vma, InvalidConfig) {
  VmaConfig cfg;
  cfg.k_min = 4;
  cfg.k_max = 2;
  EXPECT_THROW((void)run_vma_experiment(cfg), ConfigError);
  cfg = VmaConfig{};
  cfg.T_values.clear();
  EXPECT_THROW((void)run_vma_experiment(cfg), ConfigError);
}
