#include "qmar/distributions.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "qmar/error.hpp"
#include "qmar/rng.hpp"

namespace qmar {

std::string_view to_string(DistKind kind) noexcept {
  switch (kind) {
    case DistKind::Gaussian: return "gaussian";
    case DistKind::StudentT: return "student_t";
    case DistKind::Cauchy: return "cauchy";
    case DistKind::SkewedT: return "skewed_t";
    case DistKind::Uniform01: return "uniform01";
  }
  return "unknown";
}

DistKind parse_dist_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "gaussian" || lower == "normal") return DistKind::Gaussian;
  if (lower == "student_t" || lower == "studentt" || lower == "t") return DistKind::StudentT;
  if (lower == "cauchy") return DistKind::Cauchy;
  if (lower == "skewed_t" || lower == "skewedt") return DistKind::SkewedT;
  if (lower == "uniform01" || lower == "uniform") return DistKind::Uniform01;
  throw DomainError("unknown distribution kind '" + std::string(name) + "'");
}

DistributionSpec DistributionSpec::gaussian(double mu, double sigma) {
  return {DistKind::Gaussian, 0.0, 1.0, mu, sigma, false};
}
DistributionSpec DistributionSpec::student_t(double nu, double mu, double sigma) {
  return {DistKind::StudentT, nu, 1.0, mu, sigma, false};
}
DistributionSpec DistributionSpec::cauchy(double mu, double sigma) {
  return {DistKind::Cauchy, 0.0, 1.0, mu, sigma, false};
}
DistributionSpec DistributionSpec::skewed_t(double nu, double gamma, bool demeaned) {
  return {DistKind::SkewedT, nu, gamma, 0.0, 1.0, demeaned};
}
DistributionSpec DistributionSpec::uniform01() { return {DistKind::Uniform01, 0.0, 1.0, 0.0, 1.0, false}; }

void DistributionSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive and finite");
  if (!std::isfinite(mu)) throw DomainError("mu must be finite");
  const bool has_nu = kind == DistKind::StudentT || kind == DistKind::SkewedT;
  if (has_nu && (!(nu > 0.0) || !std::isfinite(nu)))
    throw DomainError("nu must be positive and finite for " + std::string(to_string(kind)));
  if (kind == DistKind::SkewedT && (!(gamma > 0.0) || !std::isfinite(gamma)))
    throw DomainError("gamma must be positive and finite for skewed_t");
  if (demeaned && kind != DistKind::SkewedT) throw DomainError("demeaned applies to skewed_t only");
  if (demeaned && !(nu > 1.0)) throw DomainError("demeaned skewed_t needs nu > 1 (first moment)");
}

namespace detail {

double student_t_pdf(double nu, double x) {
  const double log_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                       0.5 * std::log(nu * std::numbers::pi);
  return std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

double student_t_cdf(double nu, double x) {
  if (std::isinf(x)) return x < 0 ? 0.0 : 1.0;
  return boost::math::cdf(boost::math::students_t_distribution<double>(nu), x);
}

namespace {

double normal_quantile(double tau) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * tau); }

// Hill (1970) approximation to the upper t quantile with two-tailed
// probability P; used only as a starting point.
double hill_t_quantile(double nu, double P) {
  const double a = 1.0 / (nu - 0.5);
  const double b = 48.0 / (a * a);
  double c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
  const double d = ((94.5 / (b + c) - 3.0) / b + 1.0) * std::sqrt(a * std::numbers::pi / 2.0) * nu;
  double y = std::pow(d * P, 2.0 / nu);
  if (y > 0.05 + a) {
    const double x = normal_quantile(0.5 * P);
    y = x * x;
    if (nu < 5.0) c += 0.3 * (nu - 4.5) * (x + 0.6);
    c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
    y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
    y = std::expm1(a * y * y);
  } else {
    y = ((1.0 / (((nu + 6.0) / (nu * y) - 0.089 * d - 0.822) * (nu + 2.0) * 3.0) + 0.5 / (nu + 4.0)) * y - 1.0) *
            (nu + 1.0) / (nu + 2.0) +
        1.0 / y;
  }
  return std::sqrt(nu * y);
}

// Solves F_t(x) = p for p < 0.5, returning x < 0: safeguarded Newton
// (Halley-corrected) inside a bisection bracket.
double lower_t_quantile(double nu, double p) {
  double x = -hill_t_quantile(nu, 2.0 * p);
  if (!(x < 0.0) || !std::isfinite(x)) {
    const double z = normal_quantile(p);
    x = z < 0.0 ? z : -1.0;
  }
  double f = student_t_cdf(nu, x) - p;
  if (f == 0.0) return x;

  double lo, hi;
  if (f < 0.0) {
    lo = x;
    hi = 0.0;
  } else {
    hi = x;
    lo = 2.0 * x;
    while (student_t_cdf(nu, lo) > p) {
      hi = lo;
      lo *= 2.0;
      if (!std::isfinite(lo)) return -std::numeric_limits<double>::infinity();
    }
  }
  for (int iter = 0; iter < 300; ++iter) {
    const double d = student_t_pdf(nu, x);
    const double newton = f / d;
    // f''/f' for the t density is -(nu + 1) x / (nu + x^2).
    const double curvature = -(nu + 1.0) * x / (nu + x * x);
    const double denom = 1.0 - 0.5 * newton * curvature;
    double next = x - (denom > 0.5 ? newton / denom : newton);
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-12 * std::max(1.0, std::abs(x))) break;
    f = student_t_cdf(nu, x) - p;
    if (f == 0.0) break;
    if (f < 0.0)
      lo = x;
    else
      hi = x;
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

}  // namespace

double student_t_quantile(double nu, double tau) {
  if (tau == 0.5) return 0.0;
  if (nu == 1.0) {
    return tau < 0.5 ? -1.0 / std::tan(std::numbers::pi * tau) : 1.0 / std::tan(std::numbers::pi * (1.0 - tau));
  }
  if (nu == 2.0) return (2.0 * tau - 1.0) / std::sqrt(2.0 * tau * (1.0 - tau));
  return tau < 0.5 ? lower_t_quantile(nu, tau) : -lower_t_quantile(nu, 1.0 - tau);
}

}  // namespace detail

Distribution::Distribution(const DistributionSpec& spec) : spec_(spec) {
  spec_.validate();
  std::optional<double> standard_mean;
  switch (spec_.kind) {
    case DistKind::Gaussian: standard_mean = 0.0; break;
    case DistKind::StudentT:
      if (spec_.nu > 1.0) standard_mean = 0.0;
      break;
    case DistKind::Cauchy: break;
    case DistKind::Uniform01: standard_mean = 0.5; break;
    case DistKind::SkewedT: {
      const double g = spec_.gamma;
      skew_norm_ = 2.0 / (g + 1.0 / g);
      if (spec_.nu > 1.0) {
        boost::math::quadrature::exp_sinh<double> integrator;
        const double nu = spec_.nu;
        const double c = skew_norm_;
        const double right = integrator.integrate(
            [&](double z) { return z * c * detail::student_t_pdf(nu, z / g); }, 0.0,
            std::numeric_limits<double>::infinity(), 1e-13);
        const double left = integrator.integrate(
            [&](double z) { return z * c * detail::student_t_pdf(nu, g * z); }, 0.0,
            std::numeric_limits<double>::infinity(), 1e-13);
        standard_mean = right - left;
      }
      break;
    }
  }
  if (spec_.demeaned) shift_ = *standard_mean;
  if (standard_mean) mean_ = spec_.mu + spec_.sigma * (*standard_mean - shift_);
}

double Distribution::standard_pdf(double z) const {
  switch (spec_.kind) {
    case DistKind::Gaussian: return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    case DistKind::StudentT: return detail::student_t_pdf(spec_.nu, z);
    case DistKind::Cauchy: return 1.0 / (std::numbers::pi * (1.0 + z * z));
    case DistKind::Uniform01: return (z >= 0.0 && z <= 1.0) ? 1.0 : 0.0;
    case DistKind::SkewedT: {
      const double g = spec_.gamma;
      return skew_norm_ * detail::student_t_pdf(spec_.nu, z < 0.0 ? g * z : z / g);
    }
  }
  return 0.0;
}

double Distribution::standard_cdf(double z) const {
  switch (spec_.kind) {
    case DistKind::Gaussian: return 0.5 * std::erfc(-z / std::numbers::sqrt2);
    case DistKind::StudentT: return detail::student_t_cdf(spec_.nu, z);
    case DistKind::Cauchy:
      return z < 0.0 ? std::atan2(1.0, -z) / std::numbers::pi : 1.0 - std::atan2(1.0, z) / std::numbers::pi;
    case DistKind::Uniform01: return std::clamp(z, 0.0, 1.0);
    case DistKind::SkewedT: {
      const double g = spec_.gamma;
      if (z < 0.0) return skew_norm_ / g * detail::student_t_cdf(spec_.nu, g * z);
      return 1.0 - skew_norm_ * g * detail::student_t_cdf(spec_.nu, -z / g);
    }
  }
  return 0.0;
}

double Distribution::standard_quantile(double tau) const {
  switch (spec_.kind) {
    case DistKind::Gaussian: return detail::normal_quantile(tau);
    case DistKind::StudentT: return detail::student_t_quantile(spec_.nu, tau);
    case DistKind::Cauchy: return detail::student_t_quantile(1.0, tau);
    case DistKind::Uniform01: return tau;
    case DistKind::SkewedT: {
      const double g = spec_.gamma;
      const double at_zero = skew_norm_ / (2.0 * g);
      if (tau < at_zero) return detail::student_t_quantile(spec_.nu, tau * g / skew_norm_) / g;
      const double upper = (1.0 - tau) / (skew_norm_ * g);
      return upper >= 0.5 ? 0.0 : -g * detail::student_t_quantile(spec_.nu, upper);
    }
  }
  return 0.0;
}

double Distribution::pdf(double x) const {
  return standard_pdf((x - spec_.mu) / spec_.sigma + shift_) / spec_.sigma;
}

double Distribution::cdf(double x) const { return standard_cdf((x - spec_.mu) / spec_.sigma + shift_); }

double Distribution::quantile(double tau) const {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  return spec_.mu + spec_.sigma * (standard_quantile(tau) - shift_);
}

std::vector<double> Distribution::transform(std::span<const double> uniforms) const {
  std::vector<double> out(uniforms.size());
  std::transform(uniforms.begin(), uniforms.end(), out.begin(), [this](double u) { return quantile(u); });
  return out;
}

std::vector<double> Distribution::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw DomainError("sample size must be at least 1");
  UniformStream stream(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = quantile(stream.at(i));
  return out;
}

double pdf(const DistributionSpec& spec, double x) { return Distribution(spec).pdf(x); }
double cdf(const DistributionSpec& spec, double x) { return Distribution(spec).cdf(x); }
double quantile(const DistributionSpec& spec, double tau) { return Distribution(spec).quantile(tau); }
std::optional<double> mean(const DistributionSpec& spec) { return Distribution(spec).mean(); }
std::vector<double> sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
  return Distribution(spec).sample(n, seed);
}

}  // namespace qmar
