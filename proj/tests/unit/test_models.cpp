#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "qmar/error.hpp"
#include "qmar/models.hpp"
#include "qmar/rng.hpp"
#include "qmar/simulate.hpp"

namespace {

using qmar::Direction;
using qmar::DistributionSpec;
using qmar::MarSpec;
using qmar::ModelSpec;

std::vector<double> simulate(const MarSpec& spec, DistributionSpec innovation, std::size_t T, std::uint64_t seed) {
  qmar::SimConfig cfg;
  cfg.total_length = T + 400;
  cfg.seed = seed;
  cfg.innovation = innovation;
  return qmar::simulate_mar_matrix(spec, cfg);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(BuildDesign, CausalRows) {
  const std::vector<double> y{1, 2, 3, 4, 5};
  const auto p = qmar::build_design(y, ModelSpec{Direction::causal, 1, false});
  ASSERT_EQ(p.rows(), 4u);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_EQ(p.response(i), i + 2.0);
    EXPECT_EQ(p.design(i, 0), 1.0);
    EXPECT_EQ(p.design(i, 1), i + 1.0);
  }
  EXPECT_FALSE(p.row_mask.has_value());
}

TEST(BuildDesign, NoncausalRows) {
  const std::vector<double> y{1, 2, 3, 4, 5};
  const auto p = qmar::build_design(y, ModelSpec{Direction::noncausal, 1, false});
  ASSERT_EQ(p.rows(), 4u);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_EQ(p.response(i), i + 1.0);
    EXPECT_EQ(p.design(i, 1), i + 2.0);
  }
}

TEST(BuildDesign, ReversalGivesSameRowsReordered) {
  const std::vector<double> y{0.3, -1.2, 2.5, 0.7, 1.1, -0.4, 0.9};
  std::vector<double> rev(y.rbegin(), y.rend());
  const auto a = qmar::build_design(y, ModelSpec{Direction::noncausal, 2, false});
  const auto b = qmar::build_design(rev, ModelSpec{Direction::causal, 2, false});
  ASSERT_EQ(a.rows(), b.rows());
  const Eigen::Index n = static_cast<Eigen::Index>(a.rows());
  for (Eigen::Index i = 0; i < n; ++i) {
    EXPECT_EQ(a.response(i), b.response(n - 1 - i));
    EXPECT_EQ(a.design.row(i), b.design.row(n - 1 - i));
  }
}

TEST(BuildDesign, RestrictedMaskAndShortSeries) {
  const std::vector<double> y{1, -2, 3, 4, -5, 6};
  const auto p = qmar::build_design(y, ModelSpec{Direction::causal, 1, true});
  ASSERT_TRUE(p.row_mask.has_value());
  EXPECT_EQ(*p.row_mask, (std::vector<bool>{true, false, true, true, false}));
  EXPECT_THROW(qmar::build_design(std::vector<double>{1, 2, 3, 4}, ModelSpec{Direction::causal, 1, false}),
               qmar::InsufficientDataError);
  EXPECT_THROW(qmar::build_design(y, ModelSpec{Direction::causal, 0, false}), qmar::DomainError);
}

TEST(FitQar, ConstantSeriesIsDegenerate) {
  const std::vector<double> y(50, 2.0);
  EXPECT_THROW(qmar::fit_qar(y, ModelSpec{Direction::causal, 1, false}, 0.5), qmar::DegeneracyError);
}

TEST(FitQar, CausalGaussianMedianSlope) {
  std::vector<double> err;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    const auto y = simulate(MarSpec{{0.5}, {}, 1.0}, DistributionSpec::gaussian(), 200, qmar::replicate_seed(100, rep));
    const auto fit = qmar::fit_qar(y, ModelSpec{Direction::causal, 1, false}, 0.5);
    err.push_back(std::abs(fit.theta(1) - 0.5));
  }
  // 0.15 is about four Monte Carlo standard deviations.
  EXPECT_LT(*std::max_element(err.begin(), err.end()), 0.15 * 1.25);
  EXPECT_LT(median(err), 0.15);
}

TEST(FitQar, NoncausalCauchyConsistent) {
  const auto y = simulate(MarSpec{{}, {0.8}, 0.0}, DistributionSpec::cauchy(), 1000, 77);
  const auto fit = qmar::fit_qar(y, ModelSpec{Direction::noncausal, 1, false}, 0.5);
  EXPECT_NEAR(fit.theta(1), 0.8, 0.05);
}

TEST(FitQar, ReversalDuality) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto y = simulate(MarSpec{{0.6}, {}, 0.5}, DistributionSpec::student_t(3.0), 120, seed);
    const std::vector<double> rev(y.rbegin(), y.rend());
    for (double tau : {0.1, 0.5, 0.8}) {
      const auto a = qmar::fit_qar(rev, ModelSpec{Direction::causal, 2, false}, tau);
      const auto b = qmar::fit_qar(y, ModelSpec{Direction::noncausal, 2, false}, tau);
      EXPECT_LT((a.theta - b.theta).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_EQ(a.srar, b.srar);
    }
  }
}

TEST(FitQar, AffineEquivariance) {
  const auto y = simulate(MarSpec{{0.4}, {}, 1.0}, DistributionSpec::student_t(4.0), 150, 8);
  std::vector<double> scaled(y);
  for (double& v : scaled) v *= 3.0;
  const ModelSpec m{Direction::causal, 1, false};
  const auto a = qmar::fit_qar(y, m, 0.3);
  const auto b = qmar::fit_qar(scaled, m, 0.3);
  EXPECT_NEAR(b.theta(0), 3.0 * a.theta(0), 1e-9);
  EXPECT_NEAR(b.theta(1), a.theta(1), 1e-9);
  EXPECT_NEAR(b.srar, 3.0 * a.srar, 1e-9 * b.srar);
}

TEST(HannanQuinn, CriterionFormula) {
  const auto y = simulate(MarSpec{{0.5, 0.2}, {}, 0.0}, DistributionSpec::gaussian(), 300, 4);
  const auto sel = qmar::hannan_quinn(y, 4);
  ASSERT_EQ(sel.criterion.size(), 4u);
  EXPECT_EQ(sel.n_effective, 296u);
  const double n = 296.0;
  for (std::size_t k = 1; k <= 4; ++k)
    EXPECT_NEAR(sel.criterion[k - 1], std::log(sel.sigma2[k - 1]) + 2.0 * k * std::log(std::log(n)) / n, 1e-12);
  const auto best = std::min_element(sel.criterion.begin(), sel.criterion.end()) - sel.criterion.begin();
  EXPECT_EQ(sel.order, static_cast<std::size_t>(best) + 1);
  // Common sample: residual variance cannot increase with the order.
  for (std::size_t k = 1; k < 4; ++k) EXPECT_LE(sel.sigma2[k], sel.sigma2[k - 1] + 1e-12);
}

TEST(HannanQuinn, SelectsTrueOrderForAr1) {
  // Selection rate under this design is about 0.95 for p_max = 3; the
  // threshold leaves room for the binomial error of 200 draws.
  int hits = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto y = simulate(MarSpec{{0.9}, {}, 0.0}, DistributionSpec::gaussian(), 2000, qmar::replicate_seed(500, rep));
    hits += qmar::select_order_hq(y, 3) == 1;
  }
  EXPECT_GE(hits, 180);
}

TEST(HannanQuinn, WhiteNoiseDiagnostic) {
  std::vector<int> counts(6, 0);
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    const auto y = qmar::sample(DistributionSpec::gaussian(), 2000, qmar::replicate_seed(900, rep));
    ++counts[qmar::select_order_hq(y, 5)];
  }
  RecordProperty("white_noise_order1_share", counts[1]);
  EXPECT_EQ(std::max_element(counts.begin(), counts.end()) - counts.begin(), 1);
}

TEST(HannanQuinn, Preconditions) {
  const std::vector<double> y(20, 1.0);
  EXPECT_THROW(qmar::select_order_hq(y, 0), qmar::DomainError);
  EXPECT_THROW(qmar::select_order_hq(std::vector<double>(15, 1.0), 5), qmar::InsufficientDataError);
}

TEST(AmlLoglik, MatchesDirectEvaluation) {
  const std::vector<double> y{0.5,  1.2, -0.3, 2.2, 0.1, -1.4, 0.8,  1.9, 0.0, -0.6,
                              1.1, -2.0, 0.4,  0.9, 3.1, -0.2, -0.9, 0.3, 1.6, 0.7};
  qmar::AmlParams params;
  params.pi = {0.3};
  params.phi = {0.5, -0.1};
  params.alpha = 0.2;
  params.sigma = 1.3;
  params.nu = 4.5;
  // Direct: eps_t = (1 - 0.3 L)(1 - 0.5 F - (-0.1) F^2) y_t - alpha, t = 2..18 (1-based).
  double tail = 0.0;
  for (std::size_t t = 1; t + 2 < y.size(); ++t) {
    auto w = [&](std::size_t i) { return y[i] - 0.5 * y[i + 1] + 0.1 * y[i + 2]; };
    const double e = w(t) - 0.3 * w(t - 1) - 0.2;
    tail += std::log(1.0 + (e / 1.3) * (e / 1.3) / 4.5);
  }
  const double n = 17.0;
  const double expected = n * (std::lgamma(2.75) - std::log(std::sqrt(4.5 * std::numbers::pi)) - std::lgamma(2.25) -
                               std::log(1.3)) -
                          2.75 * tail;
  EXPECT_NEAR(qmar::aml_loglik(y, params), expected, 1e-10);
}

TEST(AmlFit, RecoversLeadCoefficient) {
  std::vector<double> est;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const auto y = simulate(MarSpec{{}, {0.6}, 0.0}, DistributionSpec::student_t(3.0), 500, qmar::replicate_seed(31, rep));
    const auto fit = qmar::fit_aml_t(y, 0, 1);
    EXPECT_NEAR(fit.params.phi[0], 0.6, 0.1);
    EXPECT_GT(fit.params.sigma, 0.0);
    EXPECT_GT(fit.params.nu, 0.0);
    EXPECT_NEAR(fit.loglik, qmar::aml_loglik(y, fit.params), 1e-8);
    est.push_back(fit.params.phi[0]);
  }
}

TEST(AmlFit, NearDeterministicPathLeavesOnlyConstantTerm) {
  // y_t = 0.5 y_{t-1} + tiny noise: with sigma far above the residual scale
  // the second term of the likelihood is negligible.
  const auto y = simulate(MarSpec{{0.5}, {}, 0.0}, DistributionSpec::gaussian(0.0, 1e-9), 200, 3);
  std::vector<double> path(y.size());
  path[0] = 1.0;
  for (std::size_t t = 1; t < path.size(); ++t) path[t] = 0.5 * path[t - 1] + 1.0 + y[t];
  qmar::AmlParams params;
  params.pi = {0.5};
  params.alpha = 1.0;
  params.sigma = 1e-3;
  params.nu = 5.0;
  const double n = static_cast<double>(path.size() - 1);
  const double constant =
      n * (std::lgamma(3.0) - std::log(std::sqrt(5.0 * std::numbers::pi)) - std::lgamma(2.5) - std::log(1e-3));
  EXPECT_NEAR(qmar::aml_loglik(path, params), constant, 1e-6);
}

TEST(AmlFit, BudgetExhaustionCarriesBestPoint) {
  const auto y = simulate(MarSpec{{}, {0.6}, 0.0}, DistributionSpec::student_t(3.0), 300, 2);
  qmar::AmlOptions opt;
  opt.max_evaluations = 30;
  try {
    qmar::fit_aml_t(y, 0, 1, opt);
    FAIL() << "expected ConvergenceError";
  } catch (const qmar::ConvergenceError& e) {
    EXPECT_EQ(e.best_point().size(), 4u);
    EXPECT_TRUE(std::isfinite(e.best_value()));
  }
  EXPECT_THROW(qmar::fit_aml_t(y, 0, 0), qmar::DomainError);
}
