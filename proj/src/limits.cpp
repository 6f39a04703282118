#include "locgauss/limits.hpp"

#include "locgauss/errors.hpp"
#include "locgauss/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace locgauss::limits {

using std::numbers::pi;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation followed by Halley refinement against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    // Work in the smaller tail so the residual keeps full relative precision.
    const double e = x < 0.0 ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
    const double u = e * std::sqrt(2.0 * pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double stable_cdf(double beta, double gamma, double x) {
  if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("stable_cdf: beta must lie in (0, 2]");
  if (!(gamma >= -1.0 && gamma <= 1.0)) throw DomainError("stable_cdf: gamma must lie in [-1, 1]");
  if (beta == 2.0) gamma = 0.0;
  if (gamma == 0.0 && x == 0.0) return 0.5;

  const bool unit = beta == 1.0;
  const double skew = unit ? 0.0 : gamma * std::tan(pi * beta / 2.0);
  // F(x) = 1/2 + (1/pi) int_0^inf exp(-u^beta) sin(u x - gamma u^beta Phi(u)) / u du
  auto integrand = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double ub = std::pow(u, beta);
    const double phase = unit ? u * x + (2.0 / pi) * gamma * u * std::log(u) : u * x - skew * ub;
    return std::exp(-ub) * std::sin(phase) / u;
  };

  // exp(-u^beta) < 1e-18 beyond this point.
  const double upper = std::pow(41.5, 1.0 / beta);
  const double tol = 1e-10 * pi;
  double value = 0.0;
  double error = 0.0;
  double a = 0.0;
  // Panels of roughly eight oscillation periods keep the adaptive rule well conditioned.
  const double width = std::max(1.0, std::min(upper, 16.0 * pi / std::max(std::abs(x), 1e-300)));
  while (a < upper) {
    const double b = std::min(upper, a == 0.0 ? std::min(1.0, upper) : a + width);
    const auto r = quadrature::integrate(integrand, a, b, tol, 4000);
    value += r.value;
    error += r.error;
    a = b;
  }
  if (error > 1e-8 * pi)
    throw AccuracyError("stable_cdf: quadrature did not converge at x = " + std::to_string(x),
                        error / pi);
  return std::clamp(0.5 + value / pi, 0.0, 1.0);
}

double stable_abs_mean(double beta) {
  if (!(beta > 1.0 && beta <= 2.0)) throw DomainError("stable_abs_mean: beta must lie in (1, 2]");
  return 2.0 * std::tgamma(1.0 - 1.0 / beta) / pi;
}

double stable_abs_mean_quadrature(double beta) {
  if (!(beta > 1.0 && beta <= 2.0))
    throw DomainError("stable_abs_mean_quadrature: beta must lie in (1, 2]");
  // (1 - e^{-y}) / y, accurate near y = 0
  auto ratio = [](double y) { return y < 1e-300 ? 1.0 : -std::expm1(-y) / y; };
  // [0, 1] with u = s^(1/(beta-1)): integrand becomes ratio(u^beta) / (beta - 1).
  auto head = [&](double s) {
    const double u = std::pow(s, 1.0 / (beta - 1.0));
    return ratio(std::pow(u, beta)) / (beta - 1.0);
  };
  // [1, inf) with u = 1/t: integrand becomes 1 - exp(-t^-beta).
  auto tail = [&](double t) { return t <= 0.0 ? 1.0 : -std::expm1(-std::pow(t, -beta)); };
  const auto h = quadrature::integrate(head, 0.0, 1.0, 1e-12);
  const auto t = quadrature::integrate(tail, 0.0, 1.0, 1e-12);
  if (!h.converged || !t.converged)
    throw AccuracyError("stable_abs_mean_quadrature: no convergence", h.error + t.error);
  return 2.0 / pi * (h.value + t.value);
}

double f_beta(double beta, double tau) {
  if (!(beta > 1.0 && beta <= 2.0)) throw DomainError("f_beta: beta must lie in (1, 2]");
  if (beta == 2.0) return normal_cdf(tau);
  return stable_cdf(beta, 0.0, tau * stable_abs_mean(beta) * std::sqrt(pi / 2.0));
}

double gaussian_noise_limit_variance() { return 2.0 / (std::sqrt(3.0) + pi / 6.0); }

double gaussian_noise_limit_cdf(double tau) {
  return normal_cdf(tau / std::sqrt(gaussian_noise_limit_variance()));
}

Empirical Empirical::from(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return Empirical{std::move(values)};
}

double cdf(const ReferenceLaw& law, double x) {
  struct Visitor {
    double x;
    double operator()(const Normal&) const { return normal_cdf(x); }
    double operator()(const NormalizedStable& s) const { return f_beta(s.beta, x); }
    double operator()(const GaussianNoiseLimit&) const { return gaussian_noise_limit_cdf(x); }
    double operator()(const Empirical& e) const {
      if (e.sorted_values.empty()) throw DomainError("empirical law has no values");
      const auto it = std::upper_bound(e.sorted_values.begin(), e.sorted_values.end(), x);
      return static_cast<double>(it - e.sorted_values.begin()) /
             static_cast<double>(e.sorted_values.size());
    }
  };
  return std::visit(Visitor{x}, law);
}

std::function<double(double)> make_cdf(const ReferenceLaw& law) {
  if (const auto* s = std::get_if<NormalizedStable>(&law)) {
    const double beta = s->beta;
    if (!(beta > 1.0 && beta <= 2.0)) throw DomainError("f_beta: beta must lie in (1, 2]");
    if (beta == 2.0) return normal_cdf;
    return TabulatedCdf([beta](double t) { return f_beta(beta, t); }, -12.0, 12.0, 0.005);
  }
  return [law](double x) { return cdf(law, x); };
}

TabulatedCdf::TabulatedCdf(std::function<double(double)> exact, double lo, double hi, double step)
    : exact_(std::move(exact)), lo_(lo), step_(step) {
  if (!(hi > lo) || !(step > 0.0)) throw DomainError("TabulatedCdf: need lo < hi and step > 0");
  const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  values_.resize(count);
  for (std::size_t i = 0; i < count; ++i) values_[i] = exact_(lo_ + step_ * static_cast<double>(i));
}

double TabulatedCdf::operator()(double x) const {
  const double pos = (x - lo_) / step_;
  const auto last = static_cast<double>(values_.size() - 1);
  if (!(pos >= 1.0 && pos <= last - 2.0)) return exact_(x);
  const auto i = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(i);
  // Nodes i-1, i, i+1, i+2 at offsets -1, 0, 1, 2.
  const double y0 = values_[i - 1], y1 = values_[i], y2 = values_[i + 1], y3 = values_[i + 2];
  return y0 * (-t * (t - 1.0) * (t - 2.0) / 6.0) + y1 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0) +
         y2 * (-(t + 1.0) * t * (t - 2.0) / 2.0) + y3 * ((t + 1.0) * t * (t - 1.0) / 6.0);
}

}  // namespace locgauss::limits
