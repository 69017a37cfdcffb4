#include "qmar/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "qmar/error.hpp"
#include "qmar/rng.hpp"

namespace qmar {

namespace {

// Companion eigenvalue modulus of 1 - c_1 z - ... - c_k z^k.
double companion_radius(const std::vector<double>& c) {
  if (c.empty()) return 0.0;
  const auto k = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) companion(0, j) = c[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<double> trim(const std::vector<double>& y, std::size_t burn_in) {
  return {y.begin() + static_cast<std::ptrdiff_t>(burn_in), y.end() - static_cast<std::ptrdiff_t>(burn_in)};
}

void check_stream(const MarSpec& spec, std::span<const double> innovations, std::size_t burn_in) {
  spec.validate();
  if (innovations.size() <= 2 * burn_in + spec.r() + spec.s())
    throw DomainError("innovation stream of length " + std::to_string(innovations.size()) +
                      " is too short for burn-in " + std::to_string(burn_in));
}

}  // namespace

double MarSpec::spectral_radius() const { return std::max(companion_radius(pi), companion_radius(phi)); }

void MarSpec::validate() const {
  for (double c : pi)
    if (!std::isfinite(c)) throw DomainError("lag coefficients must be finite");
  for (double c : phi)
    if (!std::isfinite(c)) throw DomainError("lead coefficients must be finite");
  if (!std::isfinite(intercept)) throw DomainError("intercept must be finite");
  if (companion_radius(pi) >= 1.0 - 1e-10)
    throw StationarityError("lag polynomial has a root on or inside the unit circle");
  if (companion_radius(phi) >= 1.0 - 1e-10)
    throw StationarityError("lead polynomial has a root on or inside the unit circle");
}

void SimConfig::validate(std::size_t r, std::size_t s) const {
  if (total_length <= 2 * burn_in + r + s)
    throw DomainError("total_length " + std::to_string(total_length) + " must exceed 2*burn_in + r + s = " +
                      std::to_string(2 * burn_in + r + s));
  innovation.validate();
}

void RegimeSpec::validate() const {
  if (!(tau_star > 0.0 && tau_star < 1.0)) throw DomainError("tau_star must lie in (0,1)");
  if (!std::isfinite(beta1) || !std::isfinite(beta2)) throw DomainError("regime coefficients must be finite");
  innovation_quantile.validate();
}

std::vector<double> draw_innovations(const SimConfig& cfg) {
  return Distribution(cfg.innovation).sample(cfg.total_length, cfg.seed);
}

BandedTriangular::BandedTriangular(std::size_t n, std::size_t bandwidth, Shape shape)
    : n_(n), bandwidth_(bandwidth), shape_(shape), diagonals_(bandwidth + 1, 0.0) {
  diagonals_[0] = 1.0;
}

void BandedTriangular::set_diagonal(std::size_t offset, double value) {
  if (offset > bandwidth_) throw DomainError("diagonal offset exceeds bandwidth");
  if (offset == 0 && value == 0.0) throw DomainError("main diagonal must be nonzero");
  diagonals_[offset] = value;
}

double BandedTriangular::at(std::size_t row, std::size_t col) const {
  const bool lower = shape_ == Shape::Lower;
  if (lower ? col > row : row > col) return 0.0;
  const std::size_t offset = lower ? row - col : col - row;
  return offset <= bandwidth_ ? diagonals_[offset] : 0.0;
}

std::vector<double> BandedTriangular::solve(std::span<const double> b) const {
  if (b.size() != n_) throw DomainError("right-hand side length does not match the matrix");
  std::vector<double> x(n_);
  const double d0 = diagonals_[0];
  if (shape_ == Shape::Lower) {
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = b[i];
      const std::size_t reach = std::min(i, bandwidth_);
      for (std::size_t k = 1; k <= reach; ++k) acc -= diagonals_[k] * x[i - k];
      x[i] = acc / d0;
    }
  } else {
    for (std::size_t i = n_; i-- > 0;) {
      double acc = b[i];
      const std::size_t reach = std::min(n_ - 1 - i, bandwidth_);
      for (std::size_t k = 1; k <= reach; ++k) acc -= diagonals_[k] * x[i + k];
      x[i] = acc / d0;
    }
  }
  return x;
}

std::vector<double> simulate_mar_matrix(const MarSpec& spec, std::span<const double> innovations,
                                        std::size_t burn_in) {
  check_stream(spec, innovations, burn_in);
  const std::size_t n = innovations.size();
  BandedTriangular lower(n, spec.r(), BandedTriangular::Shape::Lower);
  for (std::size_t k = 0; k < spec.r(); ++k) lower.set_diagonal(k + 1, -spec.pi[k]);
  BandedTriangular upper(n, spec.s(), BandedTriangular::Shape::Upper);
  for (std::size_t k = 0; k < spec.s(); ++k) upper.set_diagonal(k + 1, -spec.phi[k]);

  std::vector<double> rhs(innovations.begin(), innovations.end());
  for (double& v : rhs) v += spec.intercept;
  const std::vector<double> w = lower.solve(rhs);
  return trim(upper.solve(w), burn_in);
}

std::vector<double> simulate_mar_matrix(const MarSpec& spec, const SimConfig& cfg) {
  cfg.validate(spec.r(), spec.s());
  return simulate_mar_matrix(spec, draw_innovations(cfg), cfg.burn_in);
}

std::vector<double> simulate_mar_recursive(const MarSpec& spec, std::span<const double> innovations,
                                           std::size_t burn_in) {
  check_stream(spec, innovations, burn_in);
  const std::size_t n = innovations.size();
  const std::size_t r = spec.r();
  const std::size_t s = spec.s();

  // u_t = phi(L^{-1})^{-1} (c + eps_t), run backward from u_{N+k} = 0.
  std::vector<double> u(n);
  for (std::size_t t = n; t-- > 0;) {
    double acc = spec.intercept + innovations[t];
    for (std::size_t k = 1; k <= s && t + k < n; ++k) acc += spec.phi[k - 1] * u[t + k];
    u[t] = acc;
  }
  // y_t = pi(L)^{-1} u_t, run forward from y_{1-k} = 0.
  std::vector<double> y(n);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = u[t];
    for (std::size_t k = 1; k <= r && k <= t; ++k) acc += spec.pi[k - 1] * y[t - k];
    y[t] = acc;
  }
  return trim(y, burn_in);
}

std::vector<double> simulate_mar_recursive(const MarSpec& spec, const SimConfig& cfg) {
  cfg.validate(spec.r(), spec.s());
  return simulate_mar_recursive(spec, draw_innovations(cfg), cfg.burn_in);
}

std::vector<double> simulate_two_regime(const RegimeSpec& regime, const SimConfig& cfg) {
  regime.validate();
  if (cfg.total_length <= 2 * cfg.burn_in + 1)
    throw DomainError("total_length must exceed 2*burn_in + 1 for the two-regime generator");
  const Distribution law(regime.innovation_quantile);
  const UniformStream stream(cfg.seed);
  const std::size_t n = cfg.total_length;
  std::vector<double> y(n);
  double next = 0.0;  // y_{N+1}
  for (std::size_t t = n; t-- > 0;) {
    const double u = stream.at(t);
    const double beta = u <= regime.tau_star ? regime.beta1 : regime.beta2;
    y[t] = beta * next + law.quantile(u);
    next = y[t];
  }
  return trim(y, cfg.burn_in);
}

std::size_t default_ma_horizon(const MarSpec& spec) {
  const double rho = spec.spectral_radius();
  if (rho <= 1e-12) return 16;
  // Multiple roots contribute polynomial factors; pad by (r + s).
  const double k = std::log(1e-12) / std::log(rho) + 10.0 * static_cast<double>(spec.r() + spec.s());
  return static_cast<std::size_t>(std::clamp(std::ceil(k), 16.0, 100000.0));
}

MaCoefficients ma_coefficients(const MarSpec& spec, std::size_t K) {
  if (K < 1) throw DomainError("MA horizon K must be at least 1");
  spec.validate();

  // Power series of 1/pi(z) and 1/phi(z); the convolution for |i| <= K needs
  // terms well past K, so extend until both series are negligible.
  const double rho = spec.spectral_radius();
  std::size_t extra = 64;
  if (rho > 1e-12) extra += static_cast<std::size_t>(std::ceil(std::log(1e-18) / std::log(rho)));
  const std::size_t len = K + std::min<std::size_t>(extra, 200000);

  auto invert = [len](const std::vector<double>& c) {
    std::vector<double> b(len, 0.0);
    b[0] = 1.0;
    for (std::size_t j = 1; j < len; ++j) {
      double acc = 0.0;
      for (std::size_t k = 1; k <= c.size() && k <= j; ++k) acc += c[k - 1] * b[j - k];
      b[j] = acc;
    }
    return b;
  };
  const std::vector<double> lag = invert(spec.pi);   // weights on eps_{t-j}
  const std::vector<double> lead = invert(spec.phi);  // weights on eps_{t+k}

  MaCoefficients out;
  out.horizon = K;
  out.weights.assign(2 * K + 1, 0.0);
  const long Kl = static_cast<long>(K);
  for (long i = -Kl; i <= Kl; ++i) {
    // a_i = sum_{j - k = i} lag_j lead_k
    double acc = 0.0;
    const std::size_t j0 = i >= 0 ? static_cast<std::size_t>(i) : 0;
    for (std::size_t j = j0; j < len; ++j) {
      const long k = static_cast<long>(j) - i;
      if (k < 0 || static_cast<std::size_t>(k) >= len) break;
      acc += lag[j] * lead[static_cast<std::size_t>(k)];
    }
    out.weights[static_cast<std::size_t>(i + Kl)] = acc;
  }
  if (rho < 1.0) {
    const double edge = std::abs(out.weights.front()) + std::abs(out.weights.back());
    out.tail_bound = edge * rho / (1.0 - rho);
  }
  return out;
}

}  // namespace qmar
