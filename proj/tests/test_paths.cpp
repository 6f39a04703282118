#include "locgauss/errors.hpp"
#include "locgauss/limits.hpp"
#include "locgauss/paths.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace locgauss;
using namespace locgauss::paths;

namespace {

struct Moments {
  double mean = 0, var = 0, skew = 0, n = 0;
};

Moments moments(const double* x, std::size_t n) {
  Moments m;
  m.n = double(n);
  for (std::size_t i = 0; i < n; ++i) m.mean += x[i] / m.n;
  double m3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - m.mean;
    m.var += d * d;
    m3 += d * d * d;
  }
  m.var /= (m.n - 1);
  m.skew = m3 / m.n / std::pow(m.var, 1.5);
  return m;
}

// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

SvJumpDiffusionParams constant_vol() {
  SvJumpDiffusionParams p;
  p.xi = 0.0;
  p.jump_intensity = 0.0;
  p.v0 = 1.0;
  p.theta = 1.0;
  return p;
}

}  // namespace

TEST(SvJumpDiffusion, ConstantVolIsGaussian) {
  const int n = 100000;
  const auto path = simulate_sv_jump_diffusion(constant_vol(), PathGrid{1, n}, 3);
  const Vector x = path.increments.row(0).transpose() * std::sqrt(double(n));
  const auto m = moments(x.data(), n);
  EXPECT_GE(m.var, 0.99);
  EXPECT_LE(m.var, 1.01);
}

TEST(SvJumpDiffusion, DegenerateIsZero) {
  auto p = constant_vol();
  p.v0 = 0.0;
  p.theta = 0.0;
  const auto path = simulate_sv_jump_diffusion(p, PathGrid{3, 50}, 1);
  EXPECT_TRUE((path.increments.array() == 0.0).all());
}

TEST(SvJumpDiffusion, MeanQuadraticVariationNearTheta) {
  auto p = SvJumpDiffusionParams{};
  p.jump_intensity = 0.0;
  const auto path = simulate_sv_jump_diffusion(p, PathGrid{1000, 50}, 17);
  ASSERT_TRUE(path.latent_spot_var.has_value());
  const auto& v = *path.latent_spot_var;
  // V starts at its stationary mean, so E[average V] = theta. Its variance over D days is about
  // Var(V) * (2 / kappa) / D with stationary Var(V) = theta xi^2 / (2 kappa).
  const double avg = v.mean();
  const double se = std::sqrt(p.theta * p.xi * p.xi / (2 * p.kappa) * (2 / p.kappa) / 1000.0);
  EXPECT_NEAR(avg, p.theta, 3 * se);
  EXPECT_TRUE((v.array() > 0.0).all());
}

TEST(SvJumpDiffusion, JumpRate) {
  auto p = SvJumpDiffusionParams{};
  p.xi = 0.0;
  p.v0 = p.theta = 1e-12;  // make jumps visible against a vanishing diffusion
  const auto path = simulate_sv_jump_diffusion(p, PathGrid{10000, 20}, 23);
  const double hit = (path.increments.array().abs() > 1e-4).count();
  // intervals holding at least one jump: Binomial(20, 1 - exp(-0.5 / 20)) per day
  const double q = 1.0 - std::exp(-0.5 / 20);
  const double per_day = hit / 10000.0;
  EXPECT_NEAR(per_day, 20 * q, 3 * std::sqrt(20 * q * (1 - q) / 10000.0));
}

TEST(SvJumpDiffusion, Deterministic) {
  const auto a = simulate_sv_jump_diffusion(SvJumpDiffusionParams{}, PathGrid{5, 100}, 9);
  const auto b = simulate_sv_jump_diffusion(SvJumpDiffusionParams{}, PathGrid{5, 100}, 9);
  const auto c = simulate_sv_jump_diffusion(SvJumpDiffusionParams{}, PathGrid{5, 100}, 10);
  EXPECT_TRUE(a.increments == b.increments);
  EXPECT_FALSE(a.increments == c.increments);
}

TEST(SvJumpDiffusion, RejectsBadParams) {
  auto p = SvJumpDiffusionParams{};
  p.rho = 1.5;
  EXPECT_THROW(simulate_sv_jump_diffusion(p, PathGrid{1, 10}, 1), DomainError);
  EXPECT_THROW(simulate_sv_jump_diffusion(SvJumpDiffusionParams{}, PathGrid{1, 1}, 1), DomainError);
}

TEST(TemperedStable, UnitVarianceDefaults) {
  const TemperedStableParams p;
  EXPECT_NEAR(p.variance_per_unit_time(), 1.0, 1e-3);
  // Quadrature oracle: int x^2 A e^{-x} / x^{2.8} over (0, inf), doubled.
  double s = 0.0;
  const int steps = 2000000;
  for (int i = 0; i < steps; ++i) {
    // substitute x = t^5 to tame the singularity at 0: dx = 5 t^4 dt
    const double t = (i + 0.5) / steps * 3.0;
    const double x = std::pow(t, 5.0);
    s += 2.0 * p.A * std::exp(-x) * std::pow(x, -0.8) * 5.0 * std::pow(t, 4.0) * (3.0 / steps);
  }
  EXPECT_NEAR(p.variance_per_unit_time(), s, 1e-4);
}

TEST(TemperedStable, VarianceWithConstantClock) {
  TemperedStableParams p;
  p.time_change = constant_vol();
  const int n = 1000;
  const auto path = simulate_tempered_stable_tc(p, PathGrid{100, n}, 31);
  const Eigen::ArrayXd x = path.increments.reshaped<Eigen::RowMajor>().array() * std::sqrt(double(n));
  const auto m = moments(x.data(), x.size());
  // se of a sample variance: sqrt((mu4 - var^2) / N)
  const double mu4 = (x - m.mean).pow(4).mean();
  const double se = std::sqrt((mu4 - m.var * m.var) / m.n);
  EXPECT_NEAR(m.var, p.variance_per_unit_time(), 3 * se);
  // skewness se from the sample spread of cubed deviations
  const Eigen::ArrayXd cubes = (x - m.mean).cube();
  const double se3 = std::sqrt((cubes - cubes.mean()).square().sum() / (m.n - 1) / m.n);
  EXPECT_NEAR(m.skew, 0.0, 3 * se3 / std::pow(m.var, 1.5));
}

TEST(TemperedStable, SignSymmetry) {
  TemperedStableParams p;
  const auto path = simulate_tempered_stable_tc(p, PathGrid{100, 1000}, 5);
  const double pos = (path.increments.array() > 0.0).count();
  const double N = path.increments.size();
  EXPECT_NEAR(pos / N, 0.5, 3 * std::sqrt(0.25 / N));
  // sign flip leaves the law unchanged: two-sample KS between x and -x
  std::vector<double> a(path.increments.data(), path.increments.data() + path.increments.size());
  std::vector<double> b(a.size());
  std::transform(a.begin(), a.end(), b.begin(), [](double v) { return -v; });
  EXPECT_LT(ks_two_sample(a, b) * std::sqrt(N / 2.0), 1.63);  // 1% level
}

TEST(TemperedStable, ZeroMeasureIsZero) {
  TemperedStableParams p;
  p.A = 0.0;
  const auto path = simulate_tempered_stable_tc(p, PathGrid{2, 100}, 1);
  EXPECT_TRUE((path.increments.array() == 0.0).all());
}

TEST(TemperedStable, SmallJumpVarianceIsSmall) {
  TemperedStableParams p;
  const double eps = p.cutoff_scale * std::pow(1.0 / 100.0, 1.0 / p.alpha_ts);
  const double small = tempered_small_jump_variance(p, eps);
  EXPECT_GT(small, 0.0);
  // closed form near zero: 2 A eps^(2 - alpha) / (2 - alpha)
  EXPECT_NEAR(small, 2 * p.A * std::pow(eps, 2 - p.alpha_ts) / (2 - p.alpha_ts), 0.02 * small);
}

TEST(Stable, BetaTwoIsGaussian) {
  const StableLaw law{2.0, 0.7, 1.0};  // skew is irrelevant at beta = 2
  const int n = 100000;
  const auto path = simulate_stable(law, PathGrid{1, n}, 4);
  std::vector<double> x(path.increments.data(), path.increments.data() + n);
  std::sort(x.begin(), x.end());
  // implied law N(0, 2 c^2 / n)
  const double sd = std::sqrt(2.0 / n);
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = limits::normal_cdf(x[i] / sd);
    d = std::max({d, std::abs(g - double(i) / n), std::abs(g - double(i + 1) / n)});
  }
  EXPECT_LT(d, 0.01);
}

TEST(Stable, CauchyCase) {
  const int N = 100000;
  const auto path = simulate_stable(StableLaw{1.0, 0.0, 1.0}, PathGrid{N / 2, 2}, 8);
  // n = 2 scales by h = 1/2 with h^(1/beta); undo it to recover standard Cauchy draws.
  std::vector<double> x(path.increments.data(), path.increments.data() + N);
  for (auto& v : x) v *= 2.0;
  const double below_one = std::count_if(x.begin(), x.end(), [](double v) { return v <= 1.0; });
  EXPECT_NEAR(below_one / N, 0.75, 3 * std::sqrt(0.75 * 0.25 / N));
  std::nth_element(x.begin(), x.begin() + N / 2, x.end());
  // sample median se: 1 / (2 f(0) sqrt(N)) with f(0) = 1 / pi
  EXPECT_NEAR(x[N / 2], 0.0, 3 * std::numbers::pi / (2 * std::sqrt(double(N))));
}

TEST(Stable, SignSymmetry) {
  const auto path = simulate_stable(StableLaw{1.8, 0.0, 1.0}, PathGrid{10, 10000}, 12);
  const double N = path.increments.size();
  const double pos = (path.increments.array() > 0.0).count();
  EXPECT_NEAR(pos / N, 0.5, 3 * std::sqrt(0.25 / N));
}

TEST(Stable, SelfSimilarity) {
  const StableLaw law{1.8, 0.0, 1.0};
  const auto coarse = simulate_stable(law, PathGrid{200, 100}, 21);
  const auto fine = simulate_stable(law, PathGrid{2, 10000}, 22);
  std::vector<double> a(coarse.increments.data(), coarse.increments.data() + coarse.increments.size());
  std::vector<double> b(fine.increments.data(), fine.increments.data() + fine.increments.size());
  for (auto& v : a) v *= std::pow(100.0, 1.0 / 1.8);
  for (auto& v : b) v *= std::pow(10000.0, 1.0 / 1.8);
  const double d = ks_two_sample(a, b);
  const double m = double(a.size()) * b.size() / (a.size() + b.size());
  EXPECT_LT(d * std::sqrt(m), 1.63);  // p > 0.01
}

TEST(Stable, Domain) {
  EXPECT_THROW(simulate_stable(StableLaw{2.5, 0.0, 1.0}, PathGrid{1, 10}, 1), DomainError);
  EXPECT_THROW(simulate_stable(StableLaw{1.5, 2.0, 1.0}, PathGrid{1, 10}, 1), DomainError);
  EXPECT_THROW(simulate_stable(StableLaw{1.5, 0.0, 0.0}, PathGrid{1, 10}, 1), DomainError);
}

TEST(Noise, ZeroNoiseIsIdentity) {
  const auto path = simulate_sv_jump_diffusion(SvJumpDiffusionParams{}, PathGrid{3, 40}, 2);
  const auto noisy = add_noise(path, 0.0, 5);
  EXPECT_TRUE(noisy.increments == path.increments);
}

TEST(Noise, MovingAverageStructure) {
  SamplePath zero;
  const int n = 100000;
  zero.increments = DayMatrix::Zero(1, n);
  const auto noisy = add_noise(zero, 0.1, 7);
  const Vector x = noisy.increments.row(0).transpose();
  const auto m = moments(x.data(), n);
  // Var of the sample variance for MA(1) differences: (2 / n) sum_h gamma(h)^2 = 3 s^4 / n
  EXPECT_NEAR(m.var, 2 * 0.01, 3 * 0.02 * std::sqrt(3.0 / n));
  double c1 = 0.0;
  for (int i = 1; i < n; ++i) c1 += (x(i) - m.mean) * (x(i - 1) - m.mean);
  const double rho = c1 / (n - 1) / m.var;
  // Bartlett variance of the lag-1 autocorrelation for an MA(1) with rho = -1/2
  const double se = std::sqrt((1 - 3 * 0.25 + 4 * 0.0625) / n);
  EXPECT_NEAR(rho, -0.5, 3 * se);
  EXPECT_THROW(add_noise(zero, -1.0, 1), DomainError);
}
