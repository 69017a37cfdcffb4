#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qmar/error.hpp"
#include "qmar/rng.hpp"
#include "qmar/simulate.hpp"
#include "qmar/srar.hpp"

namespace {

using qmar::AggregateMethod;
using qmar::Direction;
using qmar::DistributionSpec;
using qmar::MarSpec;
using qmar::ModelSpec;
using qmar::SrarCurve;
using qmar::Verdict;

std::vector<double> simulate(const MarSpec& spec, DistributionSpec innovation, std::size_t T, std::uint64_t seed) {
  qmar::SimConfig cfg;
  cfg.total_length = T + 400;
  cfg.seed = seed;
  cfg.innovation = innovation;
  return qmar::simulate_mar_matrix(spec, cfg);
}

SrarCurve synthetic(std::vector<double> taus, std::vector<double> values) {
  SrarCurve c;
  c.taus = std::move(taus);
  c.values = std::move(values);
  c.intercepts.assign(c.taus.size(), 0.0);
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const ModelSpec kCausal{Direction::causal, 1, false};
const ModelSpec kNoncausal{Direction::noncausal, 1, false};

}  // namespace

TEST(Grid, DefaultAndValidation) {
  const auto g = qmar::default_grid();
  ASSERT_EQ(g.size(), 19u);
  EXPECT_DOUBLE_EQ(g.front(), 0.05);
  EXPECT_DOUBLE_EQ(g.back(), 0.95);
  EXPECT_THROW(qmar::validate_grid(std::vector<double>{}), qmar::DomainError);
  EXPECT_THROW(qmar::validate_grid(std::vector<double>{0.2, 0.2}), qmar::DomainError);
  EXPECT_THROW(qmar::validate_grid(std::vector<double>{0.5, 1.2}), qmar::DomainError);
}

TEST(Curve, ValuesMatchIndividualFits) {
  const auto y = simulate(MarSpec{{0.5}, {}, 1.0}, DistributionSpec::student_t(2.0), 200, 1);
  const auto grid = qmar::default_grid();
  const auto curve = qmar::srar_curve(y, kCausal, grid);
  ASSERT_EQ(curve.values.size(), grid.size());
  EXPECT_EQ(curve.n_effective, 199u);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto fit = qmar::fit_qar(y, kCausal, grid[i]);
    EXPECT_NEAR(curve.values[i], fit.srar, 1e-9 * fit.srar);
    EXPECT_GE(curve.values[i], 0.0);
  }
}

TEST(Curve, EndpointsUseShiftConvention) {
  const auto y = simulate(MarSpec{{0.5}, {}, 0.0}, DistributionSpec::gaussian(), 100, 2);
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const auto curve = qmar::srar_curve(y, kCausal, grid);
  EXPECT_NEAR(curve.values[0], qmar::fit_qar(y, kCausal, qmar::kEndpointShift).srar, 1e-12);
  EXPECT_LT(curve.values[0], 1e-3 * curve.values[1]);
}

TEST(Curve, PositiveHomogeneity) {
  const auto y = simulate(MarSpec{{}, {0.7}, 0.5}, DistributionSpec::student_t(3.0), 150, 3);
  std::vector<double> doubled(y);
  for (double& v : doubled) v *= 2.0;
  const auto grid = qmar::default_grid();
  for (const auto& m : {kCausal, kNoncausal}) {
    const auto a = qmar::srar_curve(y, m, grid);
    const auto b = qmar::srar_curve(doubled, m, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(b.values[i], 2.0 * a.values[i], 1e-9 * b.values[i]);
  }
}

TEST(Curve, SolverValueIsMinimal) {
  const auto y = simulate(MarSpec{{0.5}, {}, 1.0}, DistributionSpec::cauchy(), 200, 4);
  const auto problem = qmar::build_design(y, kCausal);
  for (double tau : {0.1, 0.5, 0.9}) {
    const auto fit = qmar::solve(problem, tau);
    for (double d0 : {-0.01, 0.0, 0.01})
      for (double d1 : {-0.01, 0.0, 0.01}) {
        Eigen::VectorXd theta = fit.theta;
        theta(0) += d0;
        theta(1) += d1;
        const Eigen::VectorXd r = problem.response - problem.design * theta;
        EXPECT_GE(qmar::srar_of(std::vector<double>(r.data(), r.data() + r.size()), tau), fit.srar - 1e-9);
      }
  }
}

TEST(Curve, GaussianCurvesAlmostOverlap) {
  // Sup over the grid of the per-quantile median relative gap.
  const auto grid = qmar::default_grid();
  std::vector<std::vector<double>> gaps(grid.size());
  for (std::uint64_t rep = 0; rep < 500; ++rep) {
    const auto y = simulate(MarSpec{{0.5}, {}, 1.0}, DistributionSpec::gaussian(), 200, qmar::replicate_seed(7, rep));
    const auto c = qmar::srar_curve(y, kCausal, grid);
    const auto n = qmar::srar_curve(y, kNoncausal, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      gaps[i].push_back(std::abs(c.values[i] - n.values[i]) / std::max(c.values[i], n.values[i]));
  }
  double sup = 0.0;
  for (const auto& g : gaps) sup = std::max(sup, median(g));
  EXPECT_LT(sup, 0.05);
}

TEST(Aggregate, ConstantAndTriangle) {
  const auto flat = synthetic({0.1, 0.3, 0.5, 0.9}, {2.5, 2.5, 2.5, 2.5});
  EXPECT_DOUBLE_EQ(qmar::aggregate_srar(flat, AggregateMethod::grid_mean), 2.5);
  EXPECT_DOUBLE_EQ(qmar::aggregate_srar(flat, AggregateMethod::trapezoid), 2.5);
  const auto tri = synthetic({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(qmar::aggregate_srar(tri, AggregateMethod::trapezoid), 0.5);
  EXPECT_DOUBLE_EQ(qmar::aggregate_srar(tri, AggregateMethod::grid_mean), 1.0 / 3.0);
  EXPECT_THROW(qmar::aggregate_srar(SrarCurve{}), qmar::DomainError);
}

TEST(Aggregate, ZeroCurveFixture) {
  const auto zero = synthetic(qmar::default_grid(), std::vector<double>(19, 0.0));
  EXPECT_EQ(qmar::aggregate_srar(zero), 0.0);
  EXPECT_EQ(qmar::compare_srar(0.0, 0.0), Verdict::tie);
}

TEST(Aggregate, PointwiseDominance) {
  const auto a = synthetic({0.1, 0.4, 0.6, 0.95}, {1.0, 3.0, 2.0, 0.5});
  const auto b = synthetic({0.1, 0.4, 0.6, 0.95}, {1.0, 3.5, 2.0, 0.7});
  for (auto m : {AggregateMethod::grid_mean, AggregateMethod::trapezoid})
    EXPECT_LE(qmar::aggregate_srar(a, m), qmar::aggregate_srar(b, m));
}

TEST(Aggregate, MethodsAgreeOnSelection) {
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(k / 20.0);
  int agree = 0;
  const int reps = 500;
  for (int rep = 0; rep < reps; ++rep) {
    const auto y = simulate(MarSpec{{0.5}, {}, 1.0}, DistributionSpec::student_t(2.0), 200,
                            qmar::replicate_seed(55, static_cast<std::uint64_t>(rep)));
    qmar::SelectOptions mean_opt, trap_opt;
    mean_opt.aggregate_endpoints = trap_opt.aggregate_endpoints = true;
    trap_opt.method = AggregateMethod::trapezoid;
    const auto a = qmar::compare_directions(y, 1, grid, false, mean_opt);
    const auto b = qmar::compare_directions(y, 1, grid, false, trap_opt);
    agree += a.aggregate_winner == b.aggregate_winner;
  }
  EXPECT_GE(agree, 0.99 * reps);
}

TEST(Verdict, TieThreshold) {
  EXPECT_EQ(qmar::compare_srar(1.0, 2.0), Verdict::causal);
  EXPECT_EQ(qmar::compare_srar(2.0, 1.0), Verdict::noncausal);
  EXPECT_EQ(qmar::compare_srar(1.0, 1.0 + 1e-14), Verdict::tie);
  EXPECT_EQ(qmar::compare_srar(1.0, 1.0 + 1e-10), Verdict::causal);
}

TEST(Select, ReportShapeAndConsistency) {
  const auto y = simulate(MarSpec{{}, {0.8}, 0.0}, DistributionSpec::student_t(3.0), 200, 9);
  const auto grid = qmar::default_grid();
  qmar::SelectOptions opt;
  opt.include_restricted = true;
  const auto report = qmar::select_model(y, 1, grid, opt);
  ASSERT_EQ(report.unrestricted.per_tau_winner.size(), grid.size());
  ASSERT_TRUE(report.restricted.has_value());
  EXPECT_NEAR(report.unrestricted.aggregate_causal, qmar::aggregate_srar(report.unrestricted.causal), 1e-12);
  EXPECT_EQ(report.unrestricted.aggregate_winner,
            qmar::compare_srar(report.unrestricted.aggregate_causal, report.unrestricted.aggregate_noncausal));
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_EQ(report.unrestricted.per_tau_winner[i],
              qmar::compare_srar(report.unrestricted.causal.values[i], report.unrestricted.noncausal.values[i]));
  EXPECT_TRUE(report.restricted->causal.model.restricted);
  EXPECT_LE(report.restricted->causal.n_effective, 199u);
}

TEST(Select, EndpointsExcludedFromAggregate) {
  const auto y = simulate(MarSpec{{0.5}, {}, 1.0}, DistributionSpec::student_t(2.0), 200, 10);
  std::vector<double> grid{0.0};
  for (double t : qmar::default_grid()) grid.push_back(t);
  grid.push_back(1.0);
  const auto with = qmar::select_model(y, 1, grid);
  const auto without = qmar::select_model(y, 1, qmar::default_grid());
  EXPECT_NEAR(with.unrestricted.aggregate_causal, without.unrestricted.aggregate_causal, 1e-9);
  EXPECT_EQ(with.unrestricted.per_tau_winner.size(), 21u);
}

TEST(Select, HeavyTailCausalIdentified) {
  int correct = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto y = simulate(MarSpec{{0.5}, {}, 1.0}, DistributionSpec::student_t(2.0), 200, qmar::replicate_seed(77, rep));
    correct += qmar::select_model(y, 1, qmar::default_grid()).unrestricted.aggregate_winner == Verdict::causal;
  }
  EXPECT_GE(correct, 190);
}

TEST(Shape, SymmetricPeakAtMedian) {
  std::vector<double> peaks;
  const auto grid = qmar::default_grid();
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto y = simulate(MarSpec{{0.5}, {}, 0.0}, DistributionSpec::student_t(3.0), 500, qmar::replicate_seed(13, rep));
    peaks.push_back(qmar::shape_diagnostics(qmar::srar_curve(y, kCausal, grid), std::nullopt).peak_tau);
  }
  EXPECT_NEAR(median(peaks), 0.5, 0.05 + 1e-12);
}

TEST(Shape, MeanSecondDifferencesNegative) {
  const auto grid = qmar::default_grid();
  std::vector<double> mean_sd(grid.size() - 2, 0.0);
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto y = qmar::sample(DistributionSpec::gaussian(), 500, qmar::replicate_seed(17, rep));
    const auto d = qmar::shape_diagnostics(qmar::srar_curve(y, kCausal, grid), std::nullopt);
    for (std::size_t i = 0; i < mean_sd.size(); ++i) mean_sd[i] += d.second_differences[i] / 200.0;
  }
  for (double v : mean_sd) EXPECT_LT(v, 0.0);
}

TEST(Shape, SkewnessVerdictAndPredictedPeak) {
  const auto left = synthetic({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}, {1, 3, 4, 3.5, 3, 2, 1});
  const auto d = qmar::shape_diagnostics(left, std::nullopt);
  EXPECT_DOUBLE_EQ(d.peak_tau, 0.3);
  EXPECT_EQ(d.skewness, qmar::Skewness::left);
  EXPECT_FALSE(d.predicted_peak_tau.has_value());
  auto right = synthetic({0.1, 0.3, 0.5, 0.7, 0.9}, {1, 2, 3, 4, 1});
  right.intercepts = {-2, -1, 0, 1, 2};
  const auto r = qmar::shape_diagnostics(right, 0.5);
  EXPECT_EQ(r.skewness, qmar::Skewness::right);
  ASSERT_TRUE(r.predicted_peak_tau.has_value());
  EXPECT_NEAR(*r.predicted_peak_tau, 0.6, 1e-12);
  EXPECT_THROW(qmar::shape_diagnostics(synthetic({0.1, 0.2}, {1, 2}), std::nullopt), qmar::DomainError);
}

TEST(Shape, SkewedInnovationsShiftPeak) {
  // Right-skewed innovations: mean above median, so the peak moves above 0.5.
  std::vector<double> peaks;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    const auto y = simulate(MarSpec{{0.5}, {}, 0.0}, DistributionSpec::skewed_t(3.0, 2.0), 500, qmar::replicate_seed(3, rep));
    peaks.push_back(qmar::shape_diagnostics(qmar::srar_curve(y, kCausal, qmar::default_grid()), std::nullopt).peak_tau);
  }
  EXPECT_GT(median(peaks), 0.5);
}

TEST(Theory, Slope) {
  EXPECT_EQ(qmar::theoretical_slope(DistributionSpec::gaussian(), 0.5, 500), 0.0);
  EXPECT_NEAR(qmar::theoretical_slope(DistributionSpec::gaussian(), 0.9, 100), -128.15515655446004, 1e-9);
  EXPECT_THROW(qmar::theoretical_slope(DistributionSpec::cauchy(), 0.5, 100), qmar::UndefinedMomentError);
  EXPECT_NEAR(qmar::theoretical_slope(DistributionSpec::cauchy(), 0.75, 10, 0.0), -10.0, 1e-8);
}

TEST(Theory, ConcavityNegative) {
  for (const auto& d : {DistributionSpec::gaussian(), DistributionSpec::student_t(2.0), DistributionSpec::cauchy(),
                        DistributionSpec::skewed_t(3.0, 2.0, true), DistributionSpec::uniform01()})
    for (double tau = 0.01; tau < 1.0; tau += 0.049) EXPECT_LT(qmar::theoretical_concavity(d, tau, 200), 0.0);
  // Gaussian: dF^{-1}/dtau = 1 / phi(F^{-1}(tau)); at the median 1/phi(0) = sqrt(2 pi).
  EXPECT_NEAR(qmar::theoretical_concavity(DistributionSpec::gaussian(), 0.5, 10), -20.0 * std::sqrt(2 * M_PI), 1e-6);
}
