#include "locgauss/errors.hpp"
#include "locgauss/limits.hpp"
#include "locgauss/paths.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace locgauss;
using namespace locgauss::limits;

namespace {

double bisect_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::numbers::sqrt2) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Normal, Basics) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_quantile(0.975), 1.959964, 5e-7);
  EXPECT_NEAR(normal_quantile(0.975), bisect_quantile(0.975), 1e-10);
  EXPECT_NEAR(normal_pdf(1.0), 0.241971, 5e-7);
}

TEST(Normal, SymmetryAndInversion) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(-8.0, 8.0), p(1e-12, 1.0 - 1e-12);
  for (int i = 0; i < 2000; ++i) {
    const double v = x(rng);
    EXPECT_NEAR(normal_cdf(-v) + normal_cdf(v), 1.0, 1e-12);
    const double q = p(rng);
    EXPECT_NEAR(normal_quantile(q), bisect_quantile(q), 1e-10);
  }
  for (double q : {1e-300, 1e-20, 1e-9, 0.02425, 0.5, 0.97575, 1.0 - 1e-12})
    EXPECT_NEAR(normal_cdf(normal_quantile(q)) / q, 1.0, 1e-10);
}

TEST(Normal, QuantileDomain) {
  EXPECT_THROW(normal_quantile(0.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
  EXPECT_THROW(normal_quantile(-0.5), DomainError);
}

TEST(StableCdf, ClosedForms) {
  for (double x = -10.0; x <= 10.0; x += 0.25) {
    // exp(-u^2) is the characteristic function of N(0, 2)
    EXPECT_NEAR(stable_cdf(2.0, 0.0, x), 0.5 * std::erfc(-x / 2.0), 1e-8) << x;
    EXPECT_NEAR(stable_cdf(1.0, 0.0, x), 0.5 + std::atan(x) / std::numbers::pi, 1e-8) << x;
  }
  EXPECT_NEAR(stable_cdf(1.0, 0.0, 1.0), 0.75, 1e-10);
  EXPECT_NEAR(stable_cdf(1.8, 0.0, 0.0), 0.5, 1e-12);
  EXPECT_NEAR(stable_cdf(2.0, 0.0, 0.0), 0.5, 1e-12);
}

TEST(StableCdf, SkewedLawAtZero) {
  // P(X <= 0) = 1/2 - arctan(gamma tan(pi beta / 2)) / (pi beta) for strictly stable laws
  const double pi = std::numbers::pi;
  for (double b : {0.5, 0.8, 1.3, 1.5, 1.9})
    for (double g : {-0.7, 0.5, 0.9}) {
      const double expect = 0.5 - std::atan(g * std::tan(pi * b / 2)) / (pi * b);
      EXPECT_NEAR(stable_cdf(b, g, 0.0), expect, 1e-8) << b << " " << g;
    }
  // support bounded on the left for beta < 1, gamma = 1
  EXPECT_LT(stable_cdf(0.5, 1.0, -0.5), 1e-6);
}

TEST(StableCdf, Domain) {
  EXPECT_THROW(stable_cdf(0.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(stable_cdf(2.1, 0.0, 1.0), DomainError);
  EXPECT_THROW(stable_cdf(1.5, 1.5, 1.0), DomainError);
}

TEST(StableAbsMean, Values) {
  EXPECT_NEAR(stable_abs_mean(2.0), 2.0 / std::sqrt(std::numbers::pi), 1e-12);
  EXPECT_NEAR(stable_abs_mean(2.0), 1.128379, 5e-7);
  EXPECT_GT(stable_abs_mean(1.05), 10.0);
  EXPECT_GT(stable_abs_mean_quadrature(1.05), 10.0);
  for (double b : {1.2, 1.5, 1.8, 2.0})
    EXPECT_NEAR(stable_abs_mean_quadrature(b), stable_abs_mean(b), 1e-6) << b;
  EXPECT_THROW(stable_abs_mean(1.0), DomainError);
}

TEST(StableAbsMean, GaussianOracle) {
  // int |x| density of N(0, 2)
  double s = 0.0;
  const double h = 1e-4;
  for (double x = h / 2; x < 20.0; x += h) s += 2.0 * x * std::exp(-x * x / 4.0) / std::sqrt(4.0 * std::numbers::pi) * h;
  EXPECT_NEAR(stable_abs_mean(2.0), s, 1e-7);
}

TEST(FBeta, Values) {
  EXPECT_NEAR(f_beta(2.0, 1.0), 0.841345, 5e-7);
  for (double b : {1.1, 1.5, 1.8, 2.0}) EXPECT_NEAR(f_beta(b, 0.0), 0.5, 1e-12);
  for (double t = -3.0; t <= 3.0; t += 0.5) EXPECT_NEAR(f_beta(2.0, t), normal_cdf(t), 1e-8);
  for (double t : {0.3, 1.0, 2.2}) EXPECT_NEAR(f_beta(1.6, -t) + f_beta(1.6, t), 1.0, 1e-8);
  EXPECT_THROW(f_beta(1.0, 0.0), DomainError);
}

TEST(FBeta, HeavierTailAtMinusFour) {
  EXPECT_GT(f_beta(1.5, -4.0), f_beta(1.8, -4.0));
  EXPECT_GT(f_beta(1.8, -4.0), f_beta(2.0, -4.0));
  EXPECT_GT(f_beta(1.2, -4.0), f_beta(1.5, -4.0));
}

TEST(FBeta, MatchesSimulatedDraws) {
  const paths::StableLaw law{1.8, 0.0, 1.0};
  const int N = 200000;
  std::vector<double> draws(N);
  Engine rng(77);
  const double norm = std::sqrt(2.0 / std::numbers::pi) / stable_abs_mean(1.8);
  for (auto& d : draws) d = norm * paths::draw_stable(law, rng);
  std::sort(draws.begin(), draws.end());
  const auto F = make_cdf(NormalizedStable{1.8});
  double sup = 0.0;
  for (int i = 0; i < N; ++i) {
    const double g = F(draws[i]);
    sup = std::max({sup, std::abs(g - double(i) / N), std::abs(g - double(i + 1) / N)});
  }
  // Kolmogorov 0.999 quantile is 1.95
  EXPECT_LT(sup * std::sqrt(double(N)), 1.95);
}

TEST(NoiseLimit, Variance) {
  const double v = gaussian_noise_limit_variance();
  EXPECT_NEAR(v, 2.0 / (std::sqrt(3.0) + std::numbers::pi / 6.0), 1e-15);
  EXPECT_LT(v, 1.0);
  EXPECT_EQ(gaussian_noise_limit_cdf(0.0), 0.5);
  for (double t : {-3.0, -1.0, -0.2}) EXPECT_LT(gaussian_noise_limit_cdf(t), normal_cdf(t));
}

TEST(NoiseLimit, ClosedFormMoment) {
  // E|XY| = (2 s^2 / pi)(sqrt(1 - r^2) + r asin r) for differences of unit noise: s^2 = 2, r = -1/2
  const double pi = std::numbers::pi;
  const double abs_prod = 2.0 * 2.0 / pi * (std::sqrt(0.75) - 0.5 * std::asin(-0.5));
  EXPECT_NEAR(gaussian_noise_limit_variance(), 2.0 / (pi / 2 * abs_prod), 1e-14);
  EXPECT_NEAR(gaussian_noise_limit_variance(), 0.886663, 5e-7);
}

TEST(NoiseLimit, AgreesWithSimulation) {
  // d_i = e_i - e_{i-1}; mu^2 = (pi/2) E|d_i||d_{i-1}|; compare Var(d / mu) with v, using
  // batch means for the Monte Carlo standard error.
  const int batches = 100, per_batch = 50000;
  Engine rng(5);
  std::normal_distribution<double> z;
  std::vector<double> est(batches);
  double all_prod = 0.0, all_sq = 0.0;
  for (int b = 0; b < batches; ++b) {
    double prev_e = z(rng), prev_d = z(rng) - prev_e;
    prev_e = prev_e + prev_d;
    double sp = 0.0, sq = 0.0;
    for (int i = 0; i < per_batch; ++i) {
      const double e = z(rng);
      const double d = e - prev_e;
      sp += std::abs(d) * std::abs(prev_d);
      sq += d * d;
      prev_e = e;
      prev_d = d;
    }
    est[b] = sq / (std::numbers::pi / 2 * sp);
    all_prod += sp;
    all_sq += sq;
  }
  const double v_hat = all_sq / (std::numbers::pi / 2 * all_prod);
  double mean = 0.0, var = 0.0;
  for (double e : est) mean += e / batches;
  for (double e : est) var += (e - mean) * (e - mean) / (batches - 1);
  const double se = std::sqrt(var / batches);
  EXPECT_NEAR(v_hat, gaussian_noise_limit_variance(), 3 * se);
}

TEST(ReferenceLaws, MonotoneWithLimits) {
  const std::vector<ReferenceLaw> laws = {Normal{}, NormalizedStable{1.8}, NormalizedStable{1.3},
                                          GaussianNoiseLimit{}, Empirical::from({0.3, -1.0, 2.0})};
  for (const auto& law : laws) {
    const auto F = make_cdf(law);
    double prev = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      const double x = -10.0 + 20.0 * i / 10000;
      const double v = F(x);
      ASSERT_GE(v, prev);
      prev = v;
    }
    EXPECT_LT(cdf(law, -50.0), 1e-3);
    EXPECT_GT(cdf(law, 50.0), 1.0 - 1e-3);
  }
  EXPECT_LT(cdf(Normal{}, -50.0), 1e-300);
}

TEST(ReferenceLaws, TabulatedMatchesDirect) {
  const auto F = make_cdf(NormalizedStable{1.7});
  for (double x = -6.0; x <= 6.0; x += 0.0137) EXPECT_NEAR(F(x), f_beta(1.7, x), 1e-9);
}

TEST(ReferenceLaws, Empirical) {
  const auto e = Empirical::from({2.0, 0.0, 1.0});
  EXPECT_EQ(cdf(e, -1.0), 0.0);
  EXPECT_NEAR(cdf(e, 0.0), 1.0 / 3, 1e-15);
  EXPECT_NEAR(cdf(e, 1.5), 2.0 / 3, 1e-15);
  EXPECT_EQ(cdf(e, 2.0), 1.0);
}
