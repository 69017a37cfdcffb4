#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qmar/distributions.hpp"

namespace qmar {

/// pi(L) phi(L^{-1}) y_t = intercept + eps_t with
/// pi(z) = 1 - pi_1 z - ... - pi_r z^r and phi(z) = 1 - phi_1 z - ... - phi_s z^s.
struct MarSpec {
  std::vector<double> pi;   // lag coefficients, r = pi.size()
  std::vector<double> phi;  // lead coefficients, s = phi.size()
  double intercept = 0.0;

  std::size_t r() const noexcept { return pi.size(); }
  std::size_t s() const noexcept { return phi.size(); }

  /// Throws StationarityError unless every companion eigenvalue of both
  /// polynomials has modulus below 1 - 1e-10.
  void validate() const;
  /// Largest companion eigenvalue modulus over both polynomials.
  double spectral_radius() const;
};

struct SimConfig {
  std::size_t total_length = 0;
  std::size_t burn_in = 200;  // trimmed from each end
  std::uint64_t seed = 0;
  DistributionSpec innovation;

  std::size_t retained_length() const noexcept { return total_length - 2 * burn_in; }
  /// Throws DomainError unless total_length > 2 burn_in + r + s.
  void validate(std::size_t r, std::size_t s) const;
};

/// Two-regime random-coefficient noncausal AR(1):
/// y_t = beta1 y_{t+1} + F^{-1}(u_t) when u_t <= tau_star, else beta2 y_{t+1} + F^{-1}(u_t).
struct RegimeSpec {
  double tau_star = 0.5;
  double beta1 = 0.0;
  double beta2 = 0.0;
  DistributionSpec innovation_quantile;

  void validate() const;
};

/// The innovation stream both simulators consume for a given config.
std::vector<double> draw_innovations(const SimConfig& cfg);

/// Solves L U y = intercept + eps with banded triangular factors and keeps
/// y[burn_in, N - burn_in). Values outside the sample are taken as zero.
std::vector<double> simulate_mar_matrix(const MarSpec& spec, const SimConfig& cfg);
std::vector<double> simulate_mar_matrix(const MarSpec& spec, std::span<const double> innovations,
                                        std::size_t burn_in);

/// Two-step generation: lead part backward from a zero terminal condition,
/// then the lag filter forward.
std::vector<double> simulate_mar_recursive(const MarSpec& spec, const SimConfig& cfg);
std::vector<double> simulate_mar_recursive(const MarSpec& spec, std::span<const double> innovations,
                                           std::size_t burn_in);

/// Draws u_t from UniformStream(cfg.seed); cfg.innovation is not used, the
/// regime carries its own law.
std::vector<double> simulate_two_regime(const RegimeSpec& regime, const SimConfig& cfg);

/// Truncated two-sided MA weights: y_t = sum_i a_i eps_{t-i}, |i| <= K.
struct MaCoefficients {
  std::size_t horizon = 0;
  std::vector<double> weights;  // weights[i + K] = a_i
  double tail_bound = 0.0;      // geometric estimate of sum_{|i|>K} |a_i|

  double at(long i) const { return weights.at(static_cast<std::size_t>(i + static_cast<long>(horizon))); }
};

/// Throws DomainError when K < 1, StationarityError for a nonstationary spec.
MaCoefficients ma_coefficients(const MarSpec& spec, std::size_t K);
/// Horizon after which |a_i| falls below roughly 1e-12.
std::size_t default_ma_horizon(const MarSpec& spec);

/// Lower (bandwidth below the diagonal) or upper triangular banded matrix
/// with a unit-free diagonal, stored by diagonals.
class BandedTriangular {
 public:
  enum class Shape { Lower, Upper };

  BandedTriangular(std::size_t n, std::size_t bandwidth, Shape shape);

  /// Sets every entry on diagonal `offset` (0 = main, k = k-th off-diagonal
  /// on the triangular side) to `value`.
  void set_diagonal(std::size_t offset, double value);
  double at(std::size_t row, std::size_t col) const;

  std::size_t size() const noexcept { return n_; }
  /// x = A^{-1} b by substitution in O(n * bandwidth).
  std::vector<double> solve(std::span<const double> b) const;

 private:
  std::size_t n_;
  std::size_t bandwidth_;
  Shape shape_;
  std::vector<double> diagonals_;  // (bandwidth + 1) constant diagonals
};

}  // namespace qmar
