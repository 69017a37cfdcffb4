#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qmar/error.hpp"
#include "qmar/montecarlo.hpp"

namespace {

using qmar::DistributionSpec;
using qmar::MarDgp;
using qmar::MarSpec;
using qmar::McConfig;

McConfig small_config() {
  McConfig cfg;
  cfg.n_reps = 60;
  cfg.T = 120;
  cfg.dgp = MarDgp{MarSpec{{0.5}, {}, 1.0}, DistributionSpec::student_t(2.0)};
  cfg.seed = 12345;
  return cfg;
}

bool same(const qmar::FrequencyBlock& a, const qmar::FrequencyBlock& b) {
  if (a.failed != b.failed || a.per_tau.size() != b.per_tau.size()) return false;
  for (std::size_t i = 0; i < a.per_tau.size(); ++i)
    if (a.per_tau[i].correct != b.per_tau[i].correct || a.per_tau[i].ties != b.per_tau[i].ties) return false;
  return a.aggregate.correct == b.aggregate.correct && a.aggregate.frequency == b.aggregate.frequency;
}

std::filesystem::path temp_file(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qmar_test_" + name);
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(TrueDirection, ByDgp) {
  EXPECT_EQ(qmar::true_direction(MarDgp{MarSpec{{0.5}, {}, 0.0}, {}}), qmar::Direction::causal);
  EXPECT_EQ(qmar::true_direction(MarDgp{MarSpec{{}, {0.5}, 0.0}, {}}), qmar::Direction::noncausal);
  EXPECT_EQ(qmar::true_direction(qmar::RegimeSpec{0.7, 0.2, 0.8, DistributionSpec::student_t(3.0)}),
            qmar::Direction::noncausal);
  EXPECT_THROW(qmar::true_direction(MarDgp{MarSpec{{0.5}, {0.5}, 0.0}, {}}), qmar::DomainError);
}

TEST(SelectionFrequencies, CellsAndStandardErrors) {
  const auto table = qmar::run_selection_frequencies(small_config());
  EXPECT_EQ(table.n_reps, 60u);
  EXPECT_EQ(table.grid.size(), 19u);
  ASSERT_EQ(table.unrestricted.per_tau.size(), 19u);
  EXPECT_FALSE(table.restricted.has_value());
  for (const auto& cell : table.unrestricted.per_tau) {
    EXPECT_GE(cell.frequency, 0.0);
    EXPECT_LE(cell.frequency, 1.0);
    EXPECT_EQ(cell.total, 60u);
    EXPECT_DOUBLE_EQ(cell.standard_error, std::sqrt(cell.frequency * (1 - cell.frequency) / 60.0));
  }
  EXPECT_GT(table.unrestricted.aggregate.frequency, 0.8);
}

TEST(SelectionFrequencies, WorkerCountIndependent) {
  auto cfg = small_config();
  cfg.include_restricted = true;
  cfg.parallelism = 1;
  const auto a = qmar::run_selection_frequencies(cfg);
  cfg.parallelism = 4;
  const auto b = qmar::run_selection_frequencies(cfg);
  EXPECT_TRUE(same(a.unrestricted, b.unrestricted));
  ASSERT_TRUE(a.restricted && b.restricted);
  EXPECT_TRUE(same(*a.restricted, *b.restricted));
}

TEST(SelectionFrequencies, CheckpointResumeMatchesFreshRun) {
  auto cfg = small_config();
  const auto fresh = qmar::run_selection_frequencies(cfg);
  const auto path = temp_file("ckpt.txt");
  cfg.checkpoint = path.string();
  // A partial run: write the checkpoint for the first 25 replicates only.
  auto partial = cfg;
  partial.n_reps = 25;
  EXPECT_THROW(
      {
        qmar::run_selection_frequencies(partial);
        qmar::run_selection_frequencies(cfg);
      },
      qmar::ConfigError);
  std::filesystem::remove(path);
  qmar::run_selection_frequencies(cfg);
  {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 61u);
    std::ofstream out(path, std::ios::trunc);
    for (std::size_t i = 0; i < 31; ++i) out << lines[i] << '\n';
    out << "37 ok cc";  // torn line is ignored
  }
  const auto resumed = qmar::run_selection_frequencies(cfg);
  EXPECT_TRUE(same(fresh.unrestricted, resumed.unrestricted));
  std::filesystem::remove(path);
}

TEST(SelectionFrequencies, EndpointsAppended) {
  auto cfg = small_config();
  cfg.n_reps = 5;
  cfg.include_endpoints = true;
  const auto table = qmar::run_selection_frequencies(cfg);
  ASSERT_EQ(table.grid.size(), 21u);
  EXPECT_EQ(table.grid.front(), 0.0);
  EXPECT_EQ(table.grid.back(), 1.0);
}

TEST(SelectionFrequencies, FailureBudget) {
  auto cfg = small_config();
  cfg.n_reps = 20;
  // Strongly negative level: almost no row has a nonnegative regressor.
  cfg.dgp = MarDgp{MarSpec{{0.5}, {}, -50.0}, DistributionSpec::gaussian()};
  cfg.include_restricted = true;
  EXPECT_THROW(qmar::run_selection_frequencies(cfg), qmar::NumericalError);
}

TEST(SelectionFrequencies, Validation) {
  auto cfg = small_config();
  cfg.n_reps = 0;
  EXPECT_THROW(qmar::run_selection_frequencies(cfg), qmar::DomainError);
  cfg = small_config();
  cfg.dgp = MarDgp{MarSpec{{1.2}, {}, 0.0}, DistributionSpec::gaussian()};
  EXPECT_THROW(qmar::run_selection_frequencies(cfg), qmar::StationarityError);
}

TEST(BindingFunction, ZeroCoefficientSymmetricMedian) {
  qmar::BindingConfig cfg;
  cfg.tau = 0.5;
  cfg.coefficients = {0.0};
  cfg.innovation = DistributionSpec::student_t(3.0);
  cfg.n_reps = 300;
  cfg.T = 300;
  cfg.seed = 4;
  const auto grid = qmar::run_binding_function(cfg);
  ASSERT_EQ(grid.cells.size(), 1u);
  const auto& c = grid.cells[0];
  EXPECT_EQ(c.n_ok, 300u);
  EXPECT_LT(std::abs(c.mean), 3.0 * c.standard_error);
  EXPECT_FALSE(c.non_convergent);
}

TEST(BindingFunction, StableMeanForLightTails) {
  qmar::BindingConfig cfg;
  cfg.tau = 0.5;
  cfg.coefficients = {0.8};
  cfg.innovation = DistributionSpec::student_t(10.0);
  cfg.n_reps = 200;
  cfg.T = 600;
  cfg.parallelism = 2;
  const auto grid = qmar::run_binding_function(cfg);
  EXPECT_LT(grid.cells[0].standard_error, 0.02);
  EXPECT_TRUE(std::isfinite(grid.cells[0].mean));
}

TEST(BindingFunction, DispersionFlag) {
  qmar::BindingConfig cfg;
  cfg.coefficients = {0.5};
  cfg.n_reps = 50;
  cfg.T = 100;
  cfg.dispersion_threshold = 1e-6;
  EXPECT_TRUE(qmar::run_binding_function(cfg).cells[0].non_convergent);
  cfg.coefficients = {1.0};
  EXPECT_THROW(qmar::run_binding_function(cfg), qmar::DomainError);
}

TEST(ParallelFor, PropagatesException) {
  EXPECT_THROW(qmar::parallel_for(100, 3,
                                  [](std::size_t i) {
                                    if (i == 42) throw std::runtime_error("boom");
                                  }),
               std::runtime_error);
}
