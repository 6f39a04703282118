#include "locgauss/critvals.hpp"
#include "locgauss/limits.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <numeric>

using namespace locgauss;
using namespace locgauss::critvals;

namespace {

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// (tau^2 Phi'' - tau Phi') by central differences of the CDF
double bias_shape_fd(double tau) {
  const double h = 1e-3;
  const double d1 = (phi_cdf(tau + h) - phi_cdf(tau - h)) / (2 * h);
  const double d2 = (phi_cdf(tau + h) - 2 * phi_cdf(tau) + phi_cdf(tau - h)) / (h * h);
  return tau * tau * d2 - tau * d1;
}

LimitLawConfig small_config() {
  LimitLawConfig c;
  c.replications = 4000;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Constants, BipowerConstant) {
  EXPECT_NEAR(bipower_constant(), 2.608993, 1e-6);  // quoted truncated to six places
  EXPECT_NEAR(bipower_constant(), std::pow(std::numbers::pi / 2, 2) + std::numbers::pi - 3, 1e-15);
}

TEST(Constants, BiasTerm) {
  EXPECT_EQ(bias_term(0.0, EstimatorKind::bipower), 0.0);
  EXPECT_NEAR(bias_term(1.0, EstimatorKind::bipower), -0.157825, 5e-7);
  for (double t : {-2.0, -0.7, 0.4, 1.0, 2.5}) {
    EXPECT_NEAR(bias_term(t, EstimatorKind::bipower), bias_shape_fd(t) / 8 * bipower_constant(), 1e-6) << t;
    EXPECT_NEAR(bias_term(t, EstimatorKind::truncated), bias_shape_fd(t) / 4, 1e-6) << t;
    EXPECT_NEAR(bias_term(-t, EstimatorKind::bipower), -bias_term(t, EstimatorKind::bipower), 1e-15);
  }
}

TEST(CriticalValue, HigherOrderStatistic) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::reverse(v.begin(), v.end());
  EXPECT_EQ(critical_value(v, 0.05).q, 96.0);
  EXPECT_EQ(critical_value(v, 0.01).q, 100.0);
  EXPECT_THROW(critical_value(v, 0.0), DomainError);
  EXPECT_THROW(critical_value({}, 0.05), DomainError);
}

TEST(CriticalValue, MonotoneInLevel) {
  const auto draws = simulate_sup_limit(small_config());
  double prev = 1e300;
  for (double a : {0.001, 0.01, 0.05, 0.1, 0.2, 0.5}) {
    const double q = critical_value(draws, a).q;
    EXPECT_LE(q, prev);
    prev = q;
  }
}

TEST(SupLimit, Deterministic) {
  auto c = small_config();
  const auto a = simulate_sup_limit(c);
  c.threads = 1;
  const auto b = simulate_sup_limit(c);
  EXPECT_TRUE(a == b);
  c.seed = 12;
  EXPECT_FALSE(a == simulate_sup_limit(c));
}

TEST(SupLimit, BatchEqualsSingle) {
  auto a = small_config();
  auto b = a;
  b.k_n = 100;
  b.m_n = 75;
  auto c = a;
  c.estimator_kind = EstimatorKind::truncated;
  const auto batch = simulate_sup_limits({a, b, c});
  ASSERT_EQ(batch.size(), 3u);
  EXPECT_TRUE(batch[0] == simulate_sup_limit(a));
  EXPECT_TRUE(batch[1] == simulate_sup_limit(b));
  EXPECT_TRUE(batch[2] == simulate_sup_limit(c));
  auto d = a;
  d.seed = 99;
  EXPECT_THROW(simulate_sup_limits({a, d}), DomainError);
}

TEST(SupLimit, GridCoversEvalSet) {
  const auto g = make_grid(devol::EvalSet::standard(), 0.001);
  ASSERT_FALSE(g.tau.empty());
  EXPECT_NEAR(g.tau.front(), limits::normal_quantile(0.01), 1e-12);
  EXPECT_NEAR(g.tau.back(), limits::normal_quantile(0.99), 1e-12);
  for (std::size_t i = 1; i < g.u.size(); ++i) {
    ASSERT_GT(g.u[i], g.u[i - 1]);
    if (g.segment[i] == g.segment[i - 1]) ASSERT_LE(g.u[i] - g.u[i - 1], 0.001 + 1e-12);
  }
}

TEST(LimitProcess, Z1VarianceMatchesBridge) {
  const int R = 200000;
  const std::vector<double> taus{-1.0, 0.0, 1.0};
  const auto d = sample_limit_process(EstimatorKind::bipower, taus, R, 3);
  for (int j = 0; j < 3; ++j) {
    const double p = phi_cdf(taus[j]);
    const double target = p * (1 - p);
    const Eigen::ArrayXd col = d.z1.col(j).array();
    const double var = (col - col.mean()).square().sum() / (R - 1);
    const double se = target * std::sqrt(2.0 / (R - 1));
    EXPECT_NEAR(var, target, 3 * se) << taus[j];
  }
  // Cov(Z1(-1), Z1(1)) = Phi(-1) (1 - Phi(1))
  const Eigen::ArrayXd a = d.z1.col(0).array() - d.z1.col(0).mean();
  const Eigen::ArrayXd b = d.z1.col(2).array() - d.z1.col(2).mean();
  const double cov = (a * b).sum() / (R - 1);
  const double target = phi_cdf(-1.0) * (1 - phi_cdf(1.0));
  const double se = std::sqrt((a * b - cov).square().sum() / (R - 1) / R);
  EXPECT_NEAR(cov, target, 3 * se);
}

TEST(LimitProcess, Z2IsRankOneAndIndependentOfZ1) {
  const int R = 100000;
  const std::vector<double> taus{-2.0, -1.0, 0.3, 1.0, 2.0};
  const auto d = sample_limit_process(EstimatorKind::bipower, taus, R, 4);
  const Eigen::MatrixXd c = d.z2.rowwise() - d.z2.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / (R - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const auto ev = es.eigenvalues();  // ascending
  EXPECT_LT(ev(3), 0.01 * ev(4));
  for (int i = 0; i < 5; ++i) {
    const double gi = z2_shape(taus[i], EstimatorKind::bipower);
    const double se = std::abs(gi * gi) * std::sqrt(2.0 / (R - 1));
    EXPECT_NEAR(cov(i, i), gi * gi, 3 * se + 1e-15) << taus[i];
  }
  // (tau1 Phi'(tau1) / 2)(tau2 Phi'(tau2) / 2) * constant at (-1, 1)
  const double phi1 = std::exp(-0.5) / std::sqrt(2 * std::numbers::pi);
  const double target = (-phi1 / 2) * (phi1 / 2) * bipower_constant();
  const Eigen::ArrayXd prod = c.col(1).array() * c.col(3).array();
  const double se = std::sqrt((prod - cov(1, 3)).square().sum() / (R - 1) / R);
  EXPECT_NEAR(cov(1, 3), target, 3 * se);
  const Eigen::MatrixXd c1 = d.z1.rowwise() - d.z1.colwise().mean();
  const Eigen::MatrixXd cross = c1.transpose() * c / (R - 1);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double sd = std::sqrt(cov(j, j) * (c1.col(i).squaredNorm() / (R - 1)));
      EXPECT_NEAR(cross(i, j), 0.0, 3.5 * sd / std::sqrt(double(R)) + 1e-15);
    }
}

TEST(SupLimit, KolmogorovWithoutCorrections) {
  LimitLawConfig c;
  c.eval_set = devol::EvalSet({{-8.0, 8.0}});
  c.z2_weight = 0.0;
  c.bias_weight = 0.0;
  c.replications = 100000;
  c.seed = 5;
  const auto q = critical_value(simulate_sup_limit(c), 0.05).q;
  EXPECT_NEAR(q, 1.358, 0.02);
}

TEST(SupLimit, ResolutionSelfCheck) {
  LimitLawConfig c;
  c.replications = 50000;
  EXPECT_LT(resolution_self_check(c, 0.05), 0.005);
}

TEST(Config, HashTracksDrawRelevantFields) {
  LimitLawConfig a;
  auto b = a;
  b.threads = 3;
  EXPECT_EQ(a.hash(), b.hash());
  b.k_n = 51;
  EXPECT_NE(a.hash(), b.hash());
  auto c = a;
  c.eval_set = devol::EvalSet::parse_quantile_pairs("0.01:0.4,0.6:0.98");
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(hash_hex(0xabcULL), "0000000000000abc");
  auto bad = a;
  bad.m_n = 0;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Cache, RoundTripAndHits) {
  const auto path = (std::filesystem::temp_directory_path() / "locgauss_cache_test.txt").string();
  std::remove(path.c_str());
  auto cache = CriticalValueCache::load(path);
  EXPECT_EQ(cache.size(), 0u);
  auto c = small_config();
  bool hit = true;
  const auto first = critical_values(c, {0.01, 0.05}, &cache, &hit);
  EXPECT_FALSE(hit);
  cache.save(path);
  auto reloaded = CriticalValueCache::load(path);
  EXPECT_EQ(reloaded.size(), 2u);
  const auto second = critical_values(c, {0.01, 0.05}, &reloaded, &hit);
  EXPECT_TRUE(hit);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(first[i].q, second[i].q);
    EXPECT_EQ(first[i].config_hash, c.hash());
  }
  EXPECT_EQ(*reloaded.lookup(c.hash(), 0.05), first[1].q);
  EXPECT_FALSE(reloaded.lookup(c.hash(), 0.1).has_value());
  std::remove(path.c_str());
}

TEST(Cache, BatchMatchesSingle) {
  auto a = small_config();
  auto b = a;
  b.k_n = 33;
  b.m_n = 24;
  auto c = a;
  c.seed = 99;
  std::vector<bool> hits;
  const auto batch = critical_values_batch({a, b, c}, {0.05}, nullptr, &hits);
  EXPECT_EQ(batch[0][0].q, critical_values(a, {0.05})[0].q);
  EXPECT_EQ(batch[1][0].q, critical_values(b, {0.05})[0].q);
  EXPECT_EQ(batch[2][0].q, critical_values(c, {0.05})[0].q);
}

TEST(SupLimit, BiasEffectShrinksWithN) {
  // m held at 38; k grows like n^0.45 from k = 50 at n = 100
  auto shift = [](int n, int k) {
    LimitLawConfig with;
    with.n = n;
    with.k_n = k;
    with.m_n = 38;
    with.replications = 20000;
    with.seed = 21;
    auto without = with;
    without.bias_weight = 0.0;
    const auto draws = simulate_sup_limits({with, without});
    return std::abs(critical_value(draws[0], 0.05).q - critical_value(draws[1], 0.05).q);
  };
  const double small = shift(100, 50);
  const int k_large = static_cast<int>(std::lround(50 * std::pow(100.0, 0.45)));
  const double large = shift(10000, k_large);
  EXPECT_GT(small, 0.0);
  EXPECT_GE(small, 2.0 * large) << small << " " << large;
}
