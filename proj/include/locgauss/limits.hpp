#pragma once

// Reference laws for the devolatilized empirical CDF: the standard normal, the normalized stable
// law reached under pure-jump alternatives, and the scaled-noise law reached when observations
// carry i.i.d. Gaussian noise.

#include <functional>
#include <variant>
#include <vector>

namespace locgauss::limits {

double normal_cdf(double x);
double normal_pdf(double x);
// Inverse of normal_cdf; throws DomainError outside (0, 1).
double normal_quantile(double p);

// CDF at x of the unit-scale stable law with log-characteristic function
// -|u|^beta (1 - i gamma sign(u) Phi), by Fourier inversion. Throws AccuracyError when the
// quadrature cannot certify an absolute error of 1e-8.
double stable_cdf(double beta, double gamma, double x);

// E|S_1| for the symmetric law with characteristic function exp(-|u|^beta), beta in (1, 2]:
// 2 Gamma(1 - 1/beta) / pi.
double stable_abs_mean(double beta);
// Same quantity by quadrature of E|S| = (2/pi) int_0^inf (1 - Re phi(u)) / u^2 du.
double stable_abs_mean_quadrature(double beta);

// CDF of sqrt(2/pi) S_1 / E|S_1| (symmetric beta-stable); equals normal_cdf at beta = 2.
double f_beta(double beta, double tau);

// Variance 2 / (sqrt(3) + pi/6) of (eps_i - eps_{i-1}) / mu for Gaussian noise, where
// mu^2 = (pi/2) E|d eps_i||d eps_{i-1}|.
double gaussian_noise_limit_variance();
double gaussian_noise_limit_cdf(double tau);

struct Normal {};
struct NormalizedStable {
  double beta = 2.0;
};
struct GaussianNoiseLimit {};
struct Empirical {
  std::vector<double> sorted_values;
  static Empirical from(std::vector<double> values);
};

using ReferenceLaw = std::variant<Normal, NormalizedStable, GaussianNoiseLimit, Empirical>;

// Direct evaluation; NormalizedStable requires beta in (1, 2].
double cdf(const ReferenceLaw& law, double x);

// A callable CDF suitable for repeated evaluation. Stable laws are tabulated on a fine grid and
// interpolated (cubic, error far below 1e-9); the others evaluate directly.
std::function<double(double)> make_cdf(const ReferenceLaw& law);

// Cubic Lagrange interpolation of a CDF tabulated on [lo, hi]; falls back to the exact function
// outside the table.
class TabulatedCdf {
 public:
  TabulatedCdf(std::function<double(double)> exact, double lo, double hi, double step);
  double operator()(double x) const;

 private:
  std::function<double(double)> exact_;
  double lo_;
  double step_;
  std::vector<double> values_;
};

}  // namespace locgauss::limits
