#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qmar/distributions.hpp"
#include "qmar/models.hpp"
#include "qmar/quantile_solver.hpp"

namespace qmar {

struct SrarCurve {
  std::vector<double> taus;
  std::vector<double> values;
  std::vector<double> intercepts;  // fitted theta_0(tau)
  ModelSpec model;
  std::size_t n_effective = 0;
};

/// 0.05, 0.10, ..., 0.95.
std::vector<double> default_grid();
/// Throws DomainError unless the grid is nonempty, inside [0,1] and strictly increasing.
void validate_grid(std::span<const double> taus);

/// One fit per grid point, each warm-started from the previous basis.
SrarCurve srar_curve(std::span<const double> series, const ModelSpec& model, std::span<const double> taus);

enum class AggregateMethod { grid_mean, trapezoid };
std::string_view to_string(AggregateMethod method) noexcept;
AggregateMethod parse_aggregate_method(std::string_view name);

/// grid_mean: plain average. trapezoid: composite trapezoid divided by the
/// grid span (a single point falls back to its value).
double aggregate_srar(const SrarCurve& curve, AggregateMethod method = AggregateMethod::grid_mean);

enum class Verdict { causal, noncausal, tie };
std::string_view to_string(Verdict verdict) noexcept;
/// Smaller SRAR wins; tie when |a - b| < 1e-12 max(|a|, |b|).
Verdict compare_srar(double causal, double noncausal);

struct SelectionBlock {
  SrarCurve causal;
  SrarCurve noncausal;
  std::vector<Verdict> per_tau_winner;
  double aggregate_causal = 0.0;
  double aggregate_noncausal = 0.0;
  Verdict aggregate_winner = Verdict::tie;
};

struct SelectOptions {
  AggregateMethod method = AggregateMethod::grid_mean;
  bool include_restricted = false;
  /// Whether grid points at 0 or 1 enter the aggregate.
  bool aggregate_endpoints = false;
};

struct SelectionReport {
  std::vector<double> grid;
  std::size_t p = 1;
  AggregateMethod method = AggregateMethod::grid_mean;
  SelectionBlock unrestricted;
  std::optional<SelectionBlock> restricted;
};

/// Causal and noncausal curves plus verdicts for one variant (restricted or not).
SelectionBlock compare_directions(std::span<const double> series, std::size_t p, std::span<const double> taus,
                                  bool restricted, const SelectOptions& options = {});

SelectionReport select_model(std::span<const double> series, std::size_t p, std::span<const double> taus,
                             const SelectOptions& options = {});

enum class Skewness { left, symmetric, right };
std::string_view to_string(Skewness skewness) noexcept;

struct ShapeDiagnostics {
  double peak_tau = 0.5;
  std::size_t peak_index = 0;
  std::vector<double> second_differences;  // at interior grid points
  bool concave = false;                    // every second difference < 0
  Skewness skewness = Skewness::symmetric;
  /// Where T (mean - theta_0(tau)) changes sign along the fitted intercepts,
  /// by linear interpolation. Empty without a mean or without a crossing.
  std::optional<double> predicted_peak_tau;
};

/// Throws DomainError for fewer than 5 points.
ShapeDiagnostics shape_diagnostics(const SrarCurve& curve, std::optional<double> residual_mean);

/// T (E[eps] - F^{-1}(tau)). Throws UndefinedMomentError when the law has no mean.
double theoretical_slope(const DistributionSpec& dist, double tau, std::size_t T);
double theoretical_slope(const DistributionSpec& dist, double tau, std::size_t T, double mean);
/// -2 T dF^{-1}/dtau by central difference with step 1e-5.
double theoretical_concavity(const DistributionSpec& dist, double tau, std::size_t T);

}  // namespace qmar
