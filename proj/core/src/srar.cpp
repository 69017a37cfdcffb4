#include "qmar/srar.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qmar/error.hpp"

namespace qmar {

std::vector<double> default_grid() {
  std::vector<double> taus;
  for (int k = 1; k <= 19; ++k) taus.push_back(k / 20.0);
  return taus;
}

void validate_grid(std::span<const double> taus) {
  if (taus.empty()) throw DomainError("quantile grid is empty");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] >= 0.0 && taus[i] <= 1.0)) throw DomainError("quantile grid must lie in [0,1]");
    if (i > 0 && !(taus[i] > taus[i - 1])) throw DomainError("quantile grid must be strictly increasing");
  }
}

SrarCurve srar_curve(std::span<const double> series, const ModelSpec& model, std::span<const double> taus) {
  validate_grid(taus);
  const RegressionProblem problem = build_design(series, model);
  SrarCurve curve;
  curve.model = model;
  curve.taus.assign(taus.begin(), taus.end());
  SolveOptions options;
  for (double tau : taus) {
    const QuantileFit fit = model.restricted ? solve_restricted(problem, tau, options) : solve(problem, tau, options);
    curve.values.push_back(fit.srar);
    curve.intercepts.push_back(fit.theta(0));
    curve.n_effective = fit.n_effective;
    options.initial_basis = fit.basis;
  }
  return curve;
}

std::string_view to_string(AggregateMethod method) noexcept {
  return method == AggregateMethod::grid_mean ? "grid_mean" : "trapezoid";
}

AggregateMethod parse_aggregate_method(std::string_view name) {
  if (name == "grid_mean") return AggregateMethod::grid_mean;
  if (name == "trapezoid") return AggregateMethod::trapezoid;
  throw DomainError("aggregate method must be 'grid_mean' or 'trapezoid', got '" + std::string(name) + "'");
}

double aggregate_srar(const SrarCurve& curve, AggregateMethod method) {
  const auto& v = curve.values;
  if (v.empty()) throw DomainError("cannot aggregate an empty curve");
  if (method == AggregateMethod::grid_mean || v.size() == 1) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  }
  const auto& t = curve.taus;
  double area = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) area += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
  return area / (t.back() - t.front());
}

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::causal: return "causal";
    case Verdict::noncausal: return "noncausal";
    case Verdict::tie: break;
  }
  return "tie";
}

Verdict compare_srar(double causal, double noncausal) {
  const double scale = std::max(std::abs(causal), std::abs(noncausal));
  if (std::abs(causal - noncausal) < 1e-12 * scale || causal == noncausal) return Verdict::tie;
  return causal < noncausal ? Verdict::causal : Verdict::noncausal;
}

namespace {

SrarCurve interior(const SrarCurve& curve) {
  SrarCurve out = curve;
  out.taus.clear();
  out.values.clear();
  out.intercepts.clear();
  for (std::size_t i = 0; i < curve.taus.size(); ++i) {
    if (curve.taus[i] <= 0.0 || curve.taus[i] >= 1.0) continue;
    out.taus.push_back(curve.taus[i]);
    out.values.push_back(curve.values[i]);
    out.intercepts.push_back(curve.intercepts[i]);
  }
  return out;
}

}  // namespace

SelectionBlock compare_directions(std::span<const double> series, std::size_t p, std::span<const double> taus,
                                  bool restricted, const SelectOptions& options) {
  validate_grid(taus);
  SelectionBlock block;
  block.causal = srar_curve(series, ModelSpec{Direction::causal, p, restricted}, taus);
  block.noncausal = srar_curve(series, ModelSpec{Direction::noncausal, p, restricted}, taus);
  for (std::size_t i = 0; i < taus.size(); ++i)
    block.per_tau_winner.push_back(compare_srar(block.causal.values[i], block.noncausal.values[i]));
  if (options.aggregate_endpoints) {
    block.aggregate_causal = aggregate_srar(block.causal, options.method);
    block.aggregate_noncausal = aggregate_srar(block.noncausal, options.method);
  } else {
    block.aggregate_causal = aggregate_srar(interior(block.causal), options.method);
    block.aggregate_noncausal = aggregate_srar(interior(block.noncausal), options.method);
  }
  block.aggregate_winner = compare_srar(block.aggregate_causal, block.aggregate_noncausal);
  return block;
}

SelectionReport select_model(std::span<const double> series, std::size_t p, std::span<const double> taus,
                             const SelectOptions& options) {
  validate_grid(taus);
  if (!options.aggregate_endpoints &&
      std::none_of(taus.begin(), taus.end(), [](double t) { return t > 0.0 && t < 1.0; }))
    throw DomainError("aggregate needs at least one grid point inside (0,1)");
  SelectionReport report;
  report.grid.assign(taus.begin(), taus.end());
  report.p = p;
  report.method = options.method;
  report.unrestricted = compare_directions(series, p, taus, false, options);
  if (options.include_restricted) report.restricted = compare_directions(series, p, taus, true, options);
  return report;
}

std::string_view to_string(Skewness skewness) noexcept {
  switch (skewness) {
    case Skewness::left: return "left";
    case Skewness::right: return "right";
    case Skewness::symmetric: break;
  }
  return "symmetric";
}

ShapeDiagnostics shape_diagnostics(const SrarCurve& curve, std::optional<double> residual_mean) {
  const std::size_t n = curve.values.size();
  if (n < 5 || curve.taus.size() != n) throw DomainError("shape diagnostics need a curve with at least 5 points");
  ShapeDiagnostics d;
  d.peak_index = static_cast<std::size_t>(std::max_element(curve.values.begin(), curve.values.end()) -
                                          curve.values.begin());
  d.peak_tau = curve.taus[d.peak_index];
  d.concave = true;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = curve.taus[i] - curve.taus[i - 1];
    const double h2 = curve.taus[i + 1] - curve.taus[i];
    // Divided second difference scaled to the uniform-grid convention.
    const double sd = 2.0 * h1 * h2 / (h1 + h2) *
                      ((curve.values[i + 1] - curve.values[i]) / h2 - (curve.values[i] - curve.values[i - 1]) / h1);
    d.second_differences.push_back(sd);
    if (!(sd < 0.0)) d.concave = false;
  }

  // Nearest grid point to 0.5: a peak there reads as symmetric.
  std::size_t centre = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(curve.taus[i] - 0.5) < std::abs(curve.taus[centre] - 0.5)) centre = i;
  if (d.peak_index == centre)
    d.skewness = Skewness::symmetric;
  else
    d.skewness = d.peak_tau < 0.5 ? Skewness::left : Skewness::right;

  if (residual_mean && curve.intercepts.size() == n) {
    for (std::size_t i = 1; i < n; ++i) {
      const double a = *residual_mean - curve.intercepts[i - 1];
      const double b = *residual_mean - curve.intercepts[i];
      if (a == 0.0) {
        d.predicted_peak_tau = curve.taus[i - 1];
        break;
      }
      if ((a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)) {
        d.predicted_peak_tau = curve.taus[i - 1] + (curve.taus[i] - curve.taus[i - 1]) * a / (a - b);
        break;
      }
    }
  }
  return d;
}

double theoretical_slope(const DistributionSpec& dist, double tau, std::size_t T, double mean) {
  const Distribution law(dist);
  return static_cast<double>(T) * (mean - law.quantile(tau));
}

double theoretical_slope(const DistributionSpec& dist, double tau, std::size_t T) {
  const Distribution law(dist);
  const auto m = law.mean();
  if (!m) throw UndefinedMomentError("innovation law has no first moment; supply a sample mean");
  return static_cast<double>(T) * (*m - law.quantile(tau));
}

double theoretical_concavity(const DistributionSpec& dist, double tau, std::size_t T) {
  constexpr double h = 1e-5;
  if (!(tau - h > 0.0 && tau + h < 1.0)) throw DomainError("tau must lie in (1e-5, 1 - 1e-5)");
  const Distribution law(dist);
  const double derivative = (law.quantile(tau + h) - law.quantile(tau - h)) / (2.0 * h);
  return -2.0 * static_cast<double>(T) * derivative;
}

}  // namespace qmar
