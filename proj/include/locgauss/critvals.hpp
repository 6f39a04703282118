#pragma once

// Critical values q_n(alpha, A) for the local Gaussianity test, obtained by simulating
//   sup_{tau in A} | Z1(tau) + sqrt(m/k) Z2(tau) + sqrt(m/k) (sqrt(n)/k) b(tau) |
// where Z1 is a Brownian bridge in Phi(tau), Z2 a rank-one Gaussian process and b the
// finite-sample bias of the devolatilized empirical CDF.

#include "locgauss/core.hpp"
#include "locgauss/devol_ecdf.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace locgauss::critvals {

using spotvol::EstimatorKind;

// (pi/2)^2 + pi - 3
double bipower_constant();

// Bias shape (tau^2 Phi''(tau) - tau Phi'(tau)) / 8 * ((pi/2)^2 + pi - 3) for bipower,
// (tau^2 Phi''(tau) - tau Phi'(tau)) / 4 for truncated variation.
double bias_term(double tau, EstimatorKind kind);

// g with Cov(Z2(t1), Z2(t2)) = g(t1) g(t2):
//   bipower   tau Phi'(tau) / 2 * sqrt((pi/2)^2 + pi - 3)
//   truncated tau Phi'(tau)
double z2_shape(double tau, EstimatorKind kind);

struct LimitLawConfig {
  EstimatorKind estimator_kind = EstimatorKind::bipower;
  // Increments in the tested sample; a test pooling several days of n increments uses
  // days * n here (k_n and m_n stay per block).
  int n = 25200;
  int k_n = 50;
  int m_n = 37;
  devol::EvalSet eval_set = devol::EvalSet::standard();
  int replications = 100000;
  double grid_step = 0.001;  // maximal spacing of the grid in Phi(tau)
  std::uint64_t seed = 20240601;
  // Overrides for the Z2 and bias multipliers; by default sqrt(m/k) and sqrt(m/k) sqrt(n)/k.
  std::optional<double> z2_weight;
  std::optional<double> bias_weight;
  // Between grid points, sample the maximum of the conditioned bridge instead of reading the
  // sup off the grid only.
  bool bridge_correction = true;
  unsigned threads = 0;  // 0: hardware concurrency; does not affect results

  void validate() const;
  double resolved_z2_weight() const;
  double resolved_bias_weight() const;
  // Canonical text of every field that affects the draws.
  std::string canonical() const;
  std::uint64_t hash() const;
};

struct TauGrid {
  std::vector<double> tau;
  std::vector<double> u;  // Phi(tau)
  // segment[i] identifies the interval of the eval set the point belongs to.
  std::vector<int> segment;
};

TauGrid make_grid(const devol::EvalSet& eval_set, double phi_step);

// One sup draw per replication; identical for identical configs regardless of thread count.
std::vector<double> simulate_sup_limit(const LimitLawConfig& config);
// Several configs that share eval set, grid step, replications and seed reuse one set of
// bridge draws; each result equals the corresponding simulate_sup_limit call.
std::vector<std::vector<double>> simulate_sup_limits(const std::vector<LimitLawConfig>& configs);

// Joint draws of (Z1, Z2) on an increasing tau grid; rows are replications.
struct LimitDraws {
  Eigen::MatrixXd z1;
  Eigen::MatrixXd z2;
};
LimitDraws sample_limit_process(EstimatorKind kind, const std::vector<double>& taus,
                                int replications, std::uint64_t seed);

struct CriticalValue {
  double alpha = 0.05;
  double q = 0.0;
  std::uint64_t config_hash = 0;
};

// Empirical (1 - alpha)-quantile with the "higher" order-statistic convention.
CriticalValue critical_value(std::vector<double> sup_draws, double alpha,
                             std::uint64_t config_hash = 0);

// Relative gap |q(step) - q(step/2)| / q(step) at the given level.
double resolution_self_check(const LimitLawConfig& config, double alpha = 0.05);

// Text cache of critical values, one entry per line:
//   <config hash, 16 hex digits> <alpha> <q>
// Lines starting with '#' are comments. Values are written with 17 significant digits.
class CriticalValueCache {
 public:
  CriticalValueCache() = default;
  static CriticalValueCache load(const std::string& path);  // missing file: empty cache
  void save(const std::string& path) const;

  std::optional<double> lookup(std::uint64_t hash, double alpha) const;
  void store(const CriticalValue& cv);
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<std::uint64_t, double>, double> entries_;
};

// Critical values at every level, served from `cache` when all are present (sets *cache_hit).
std::vector<CriticalValue> critical_values(const LimitLawConfig& config,
                                           const std::vector<double>& alphas,
                                           CriticalValueCache* cache = nullptr,
                                           bool* cache_hit = nullptr);

// Same for several configs at once; misses that can share draws are simulated together.
std::vector<std::vector<CriticalValue>> critical_values_batch(
    const std::vector<LimitLawConfig>& configs, const std::vector<double>& alphas,
    CriticalValueCache* cache = nullptr, std::vector<bool>* cache_hits = nullptr);

std::string hash_hex(std::uint64_t hash);

}  // namespace locgauss::critvals
