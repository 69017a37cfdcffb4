#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "qmar/quantile_solver.hpp"

namespace qmar {

enum class Direction { causal, noncausal };
std::string_view to_string(Direction direction) noexcept;
Direction parse_direction(std::string_view name);

/// QCAR(p) regresses y_t on its p lags, QNCAR(p) on its p leads. The
/// restricted variants keep only rows whose regressors are all >= 0.
struct ModelSpec {
  Direction direction = Direction::causal;
  std::size_t p = 1;
  bool restricted = false;

  void validate() const;
};

/// Both directions yield T - p rows: causal t = p+1..T with columns
/// [1, y_{t-1}, ..., y_{t-p}], noncausal t = 1..T-p with [1, y_{t+1}, ..., y_{t+p}].
RegressionProblem build_design(std::span<const double> series, const ModelSpec& model);

QuantileFit fit_qar(std::span<const double> series, const ModelSpec& model, double tau,
                    const SolveOptions& options = {});

struct OrderSelection {
  std::size_t order = 1;
  std::vector<double> criterion;  // criterion[k-1] for order k
  std::vector<double> sigma2;     // residual variance per order
  std::size_t n_effective = 0;
};

/// Hannan-Quinn over OLS AR(k), k = 1..p_max, all orders fitted on rows
/// t = p_max+1..T: argmin ln sigma2_k + 2 k ln(ln n) / n.
OrderSelection hannan_quinn(std::span<const double> series, std::size_t p_max);
std::size_t select_order_hq(std::span<const double> series, std::size_t p_max);

/// Parameters of pi(L) phi(L^{-1}) y_t = alpha + eps_t, eps_t ~ sigma t(nu).
struct AmlParams {
  std::vector<double> pi;
  std::vector<double> phi;
  double alpha = 0.0;
  double sigma = 1.0;
  double nu = 5.0;
};

struct AmlFit {
  AmlParams params;
  double loglik = 0.0;
  std::size_t evaluations = 0;
  std::size_t restarts = 0;
};

struct AmlOptions {
  std::size_t max_evaluations = 50000;
  std::size_t restarts = 3;
  double tolerance = 1e-10;
};

/// Approximate t log-likelihood over t = r+1..T-s.
double aml_loglik(std::span<const double> series, const AmlParams& params);

/// Nelder-Mead maximization of aml_loglik with sigma = exp(.), nu = exp(.).
/// Throws ConvergenceError (carrying the best point) when the budget runs out.
AmlFit fit_aml_t(std::span<const double> series, std::size_t r, std::size_t s, const AmlOptions& options = {});

/// Generic derivative-free minimizer used by fit_aml_t.
struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, std::vector<double> step, std::size_t budget,
                             double tolerance);

}  // namespace qmar

#include "qmar/detail/nelder_mead.hpp"
