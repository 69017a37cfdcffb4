#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace qmar {

/// min over theta of sum_t rho_tau(y_t - x_t' theta) over the rows kept by
/// `row_mask` (all rows when absent). Column 0 of `design` is the intercept.
struct RegressionProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  std::optional<std::vector<bool>> row_mask;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(design.rows()); }
  std::size_t columns() const noexcept { return static_cast<std::size_t>(design.cols()); }
  /// Rows with every non-intercept regressor >= 0.
  std::vector<bool> nonnegative_regressor_mask() const;
};

enum class SolverStatus { optimal, degenerate_optimal };
std::string_view to_string(SolverStatus status) noexcept;

struct QuantileFit {
  double tau = 0.5;            // requested level
  double tau_effective = 0.5;  // level actually solved (endpoint shift)
  Eigen::VectorXd theta;
  std::vector<std::size_t> used_rows;  // indices into the problem, ascending
  std::vector<double> residuals;       // aligned with used_rows
  double srar = 0.0;
  std::size_t n_effective = 0;
  SolverStatus status = SolverStatus::optimal;
  std::vector<std::size_t> basis;  // problem row indices with zero residual defining theta
  std::size_t iterations = 0;
};

/// Endpoint levels 0 and 1 are solved at these values.
inline constexpr double kEndpointShift = 1e-6;
/// Relative tolerance of the column-pivoted rank test.
inline constexpr double kRankTolerance = 1e-10;

/// rho_tau(u) = u (tau - 1{u < 0}).
double check_loss(double u, double tau);

struct SolveOptions {
  /// Starting basis (problem row indices). Ignored when not usable.
  std::optional<std::vector<std::size_t>> initial_basis;
  std::size_t max_iterations = 0;  // 0 = automatic
};

/// Exact minimizer by a basis-exchange simplex over observations with
/// multi-breakpoint line searches. tau in [0,1]; 0 and 1 are shifted by
/// kEndpointShift. Throws DegeneracyError on a rank-deficient design,
/// InsufficientDataError when n_effective <= columns, DomainError for bad tau
/// or non-finite data.
QuantileFit solve(const RegressionProblem& problem, double tau, const SolveOptions& options = {});

/// solve() over rows whose regressors are all nonnegative. Uses
/// problem.row_mask when present, otherwise derives it.
QuantileFit solve_restricted(const RegressionProblem& problem, double tau, const SolveOptions& options = {});

/// Sum of rho_tau over the given residuals, accumulated in ascending order
/// so the result does not depend on row order.
double srar_of(std::vector<double> residuals, double tau);

}  // namespace qmar
