#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qmar {

enum class DistKind { Gaussian, StudentT, Cauchy, SkewedT, Uniform01 };

std::string_view to_string(DistKind kind) noexcept;
/// Accepts the names produced by `to_string` (case-insensitive) plus the
/// aliases "normal", "t", "skewed_t".
DistKind parse_dist_kind(std::string_view name);

/// Innovation law: X = mu + sigma * (Z - shift), where Z is the standard
/// member of the family and shift = E[Z] when `demeaned` is set (SkewedT
/// only). For SkewedT, Z has density 2/(gamma + 1/gamma) * f_t(gamma z) for
/// z < 0 and 2/(gamma + 1/gamma) * f_t(z / gamma) for z >= 0, f_t the
/// symmetric Student t(nu) density.
struct DistributionSpec {
  DistKind kind = DistKind::Gaussian;
  double nu = 0.0;     // StudentT, SkewedT
  double gamma = 1.0;  // SkewedT
  double mu = 0.0;
  double sigma = 1.0;
  bool demeaned = false;

  static DistributionSpec gaussian(double mu = 0.0, double sigma = 1.0);
  static DistributionSpec student_t(double nu, double mu = 0.0, double sigma = 1.0);
  static DistributionSpec cauchy(double mu = 0.0, double sigma = 1.0);
  static DistributionSpec skewed_t(double nu, double gamma, bool demeaned = false);
  static DistributionSpec uniform01();

  /// Throws DomainError when a parameter is out of range.
  void validate() const;

  bool operator==(const DistributionSpec&) const = default;
};

/// A validated law with precomputed constants. Cheap to copy; immutable.
class Distribution {
 public:
  explicit Distribution(const DistributionSpec& spec);

  const DistributionSpec& spec() const noexcept { return spec_; }

  double pdf(double x) const;
  double cdf(double x) const;
  /// Throws DomainError unless 0 < tau < 1.
  double quantile(double tau) const;
  /// Empty when the first moment does not exist.
  std::optional<double> mean() const noexcept { return mean_; }

  /// i.i.d. draws by inverse CDF over UniformStream(seed).
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;
  /// Inverse CDF applied to caller-supplied uniforms in (0,1).
  std::vector<double> transform(std::span<const double> uniforms) const;

 private:
  double standard_pdf(double z) const;
  double standard_cdf(double z) const;
  double standard_quantile(double tau) const;

  DistributionSpec spec_;
  double shift_ = 0.0;  // E[Z] when demeaned
  double skew_norm_ = 1.0;
  std::optional<double> mean_;
};

double pdf(const DistributionSpec& spec, double x);
double cdf(const DistributionSpec& spec, double x);
double quantile(const DistributionSpec& spec, double tau);
std::optional<double> mean(const DistributionSpec& spec);
std::vector<double> sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed);

namespace detail {
/// Symmetric standard Student t(nu) pieces used by StudentT and SkewedT.
double student_t_pdf(double nu, double x);
double student_t_cdf(double nu, double x);
/// Bisection-safeguarded Newton on the CDF, |step| tolerance 1e-12.
double student_t_quantile(double nu, double tau);
}  // namespace detail

}  // namespace qmar
