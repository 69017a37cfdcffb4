#include "qmar/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "qmar/error.hpp"

namespace qmar {

std::string_view to_string(Direction direction) noexcept {
  return direction == Direction::causal ? "causal" : "noncausal";
}

Direction parse_direction(std::string_view name) {
  if (name == "causal") return Direction::causal;
  if (name == "noncausal") return Direction::noncausal;
  throw DomainError("direction must be 'causal' or 'noncausal', got '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (p < 1) throw DomainError("autoregressive order must be at least 1");
}

RegressionProblem build_design(std::span<const double> series, const ModelSpec& model) {
  model.validate();
  const std::size_t T = series.size();
  const std::size_t p = model.p;
  if (T <= 2 * p + 2)
    throw InsufficientDataError("series of length " + std::to_string(T) + " is too short for order " +
                                    std::to_string(p),
                                T > p ? T - p : 0);
  for (double v : series)
    if (!std::isfinite(v)) throw DomainError("series contains non-finite values");

  const auto rows = static_cast<Eigen::Index>(T - p);
  RegressionProblem problem;
  problem.design.resize(rows, static_cast<Eigen::Index>(p + 1));
  problem.response.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::size_t t = model.direction == Direction::causal ? static_cast<std::size_t>(i) + p
                                                               : static_cast<std::size_t>(i);
    problem.response(i) = series[t];
    problem.design(i, 0) = 1.0;
    for (std::size_t j = 1; j <= p; ++j)
      problem.design(i, static_cast<Eigen::Index>(j)) =
          model.direction == Direction::causal ? series[t - j] : series[t + j];
  }
  if (model.restricted) problem.row_mask = problem.nonnegative_regressor_mask();
  return problem;
}

QuantileFit fit_qar(std::span<const double> series, const ModelSpec& model, double tau,
                    const SolveOptions& options) {
  const RegressionProblem problem = build_design(series, model);
  return model.restricted ? solve_restricted(problem, tau, options) : solve(problem, tau, options);
}

OrderSelection hannan_quinn(std::span<const double> series, std::size_t p_max) {
  if (p_max < 1) throw DomainError("p_max must be at least 1");
  const std::size_t T = series.size();
  if (T <= 3 * p_max)
    throw InsufficientDataError("series of length " + std::to_string(T) + " is too short for p_max " +
                                    std::to_string(p_max),
                                T > p_max ? T - p_max : 0);
  const std::size_t n = T - p_max;
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) y(i) = series[static_cast<std::size_t>(i) + p_max];

  OrderSelection out;
  out.n_effective = n;
  const double penalty = 2.0 * std::log(std::log(static_cast<double>(n))) / static_cast<double>(n);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= p_max; ++k) {
    Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(k + 1));
    for (Eigen::Index i = 0; i < rows; ++i) {
      const std::size_t t = static_cast<std::size_t>(i) + p_max;
      x(i, 0) = 1.0;
      for (std::size_t j = 1; j <= k; ++j) x(i, static_cast<Eigen::Index>(j)) = series[t - j];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < x.cols())
      throw DegeneracyError("OLS design for order " + std::to_string(k) + " is rank deficient", {});
    const Eigen::VectorXd beta = qr.solve(y);
    const double sigma2 = (y - x * beta).squaredNorm() / static_cast<double>(n);
    if (!(sigma2 > 0.0)) throw DegeneracyError("OLS residual variance is zero for order " + std::to_string(k), {});
    const double crit = std::log(sigma2) + penalty * static_cast<double>(k);
    out.sigma2.push_back(sigma2);
    out.criterion.push_back(crit);
    if (crit < best) {
      best = crit;
      out.order = k;
    }
  }
  return out;
}

std::size_t select_order_hq(std::span<const double> series, std::size_t p_max) {
  return hannan_quinn(series, p_max).order;
}

namespace {

// eps_t = pi(L) phi(L^{-1}) y_t - alpha for t = r..T-1-s (0-based).
std::vector<double> aml_residuals(std::span<const double> y, const std::vector<double>& pi,
                                  const std::vector<double>& phi, double alpha) {
  const std::size_t T = y.size();
  const std::size_t r = pi.size();
  const std::size_t s = phi.size();
  std::vector<double> w(T - s);
  for (std::size_t t = 0; t + s < T; ++t) {
    double acc = y[t];
    for (std::size_t k = 1; k <= s; ++k) acc -= phi[k - 1] * y[t + k];
    w[t] = acc;
  }
  std::vector<double> e;
  e.reserve(T - r - s);
  for (std::size_t t = r; t + s < T; ++t) {
    double acc = w[t] - alpha;
    for (std::size_t j = 1; j <= r; ++j) acc -= pi[j - 1] * w[t - j];
    e.push_back(acc);
  }
  return e;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

// OLS slopes of y_t on y_{t-1..t-k} (lags) with intercept.
std::vector<double> ols_slopes(std::span<const double> y, std::size_t k, bool leads) {
  if (k == 0) return {};
  const std::size_t T = y.size();
  const auto rows = static_cast<Eigen::Index>(T - k);
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(k + 1));
  Eigen::VectorXd z(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::size_t t = leads ? static_cast<std::size_t>(i) : static_cast<std::size_t>(i) + k;
    z(i) = y[t];
    x(i, 0) = 1.0;
    for (std::size_t j = 1; j <= k; ++j) x(i, static_cast<Eigen::Index>(j)) = leads ? y[t + j] : y[t - j];
  }
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(z);
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = beta(static_cast<Eigen::Index>(j + 1));
  return out;
}

}  // namespace

double aml_loglik(std::span<const double> series, const AmlParams& params) {
  const std::size_t p = params.pi.size() + params.phi.size();
  if (series.size() <= p) throw InsufficientDataError("series too short for the likelihood", 0);
  if (!(params.sigma > 0.0) || !(params.nu > 0.0)) throw DomainError("sigma and nu must be positive");
  const double nu = params.nu;
  const double sigma = params.sigma;
  const std::vector<double> e = aml_residuals(series, params.pi, params.phi, params.alpha);
  const double count = static_cast<double>(series.size() - p);
  const double constant = std::lgamma(0.5 * (nu + 1.0)) - std::log(std::sqrt(nu * std::numbers::pi)) -
                          std::lgamma(0.5 * nu) - std::log(sigma);
  double tail = 0.0;
  for (double v : e) {
    const double z = v / sigma;
    tail += std::log1p(z * z / nu);
  }
  return count * constant - 0.5 * (nu + 1.0) * tail;
}

AmlFit fit_aml_t(std::span<const double> series, std::size_t r, std::size_t s, const AmlOptions& options) {
  if (r + s < 1) throw DomainError("AML fit needs r + s >= 1");
  const std::size_t T = series.size();
  if (T <= 3 * (r + s) + 3) throw InsufficientDataError("series too short for the AML fit", T);

  // Start: lag slopes by OLS on the series, lead slopes by OLS on the lag-
  // filtered series, location and scale from residual median and MAD.
  AmlParams start;
  start.pi = ols_slopes(series, r, false);
  std::vector<double> filtered(series.begin(), series.end());
  if (r > 0) {
    filtered.assign(T - r, 0.0);
    for (std::size_t t = r; t < T; ++t) {
      double acc = series[t];
      for (std::size_t j = 1; j <= r; ++j) acc -= start.pi[j - 1] * series[t - j];
      filtered[t - r] = acc;
    }
  }
  start.phi = ols_slopes(filtered, s, true);
  std::vector<double> e = aml_residuals(series, start.pi, start.phi, 0.0);
  start.alpha = median(e);
  for (double& v : e) v = std::abs(v - start.alpha);
  start.sigma = std::max(1.4826 * median(e), 1e-8);
  start.nu = 4.0;

  const std::size_t dim = r + s + 3;
  auto unpack = [r, s](const std::vector<double>& x) {
    AmlParams p;
    p.pi.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(r));
    p.phi.assign(x.begin() + static_cast<std::ptrdiff_t>(r), x.begin() + static_cast<std::ptrdiff_t>(r + s));
    p.alpha = x[r + s];
    p.sigma = std::exp(x[r + s + 1]);
    p.nu = std::exp(x[r + s + 2]);
    return p;
  };
  auto objective = [&](const std::vector<double>& x) {
    const AmlParams p = unpack(x);
    if (!std::isfinite(p.sigma) || !std::isfinite(p.nu) || p.sigma <= 0.0 || p.nu <= 0.0)
      return std::numeric_limits<double>::infinity();
    return -aml_loglik(series, p);
  };

  std::vector<double> x(dim);
  std::copy(start.pi.begin(), start.pi.end(), x.begin());
  std::copy(start.phi.begin(), start.phi.end(), x.begin() + static_cast<std::ptrdiff_t>(r));
  x[r + s] = start.alpha;
  x[r + s + 1] = std::log(start.sigma);
  x[r + s + 2] = std::log(start.nu);
  std::vector<double> step(dim, 0.1);
  step[r + s] = 0.25 * start.sigma;
  step[r + s + 1] = 0.3;
  step[r + s + 2] = 0.5;

  AmlFit fit;
  std::size_t used = 0;
  NelderMeadResult best{x, objective(x), 1, false};
  bool converged = false;
  for (std::size_t attempt = 0; attempt <= options.restarts && used < options.max_evaluations; ++attempt) {
    NelderMeadResult run = nelder_mead(objective, best.x, step, options.max_evaluations - used, options.tolerance);
    used += run.evaluations;
    const double gain = best.value - run.value;
    if (run.value <= best.value) best = run;
    fit.restarts = attempt;
    // A restart that cannot improve on the previous optimum confirms it.
    if (run.converged && attempt > 0 && gain <= options.tolerance * (1.0 + std::abs(best.value))) {
      converged = true;
      break;
    }
    for (double& v : step) v *= 0.5;
  }
  fit.evaluations = used;
  if (!converged)
    throw ConvergenceError("AML optimizer did not converge within " + std::to_string(options.max_evaluations) +
                               " evaluations",
                           best.x, -best.value);
  fit.params = unpack(best.x);
  fit.loglik = aml_loglik(series, fit.params);
  return fit;
}

}  // namespace qmar
