#pragma once

#include "locgauss/core.hpp"

#include <cstdint>
#include <optional>

namespace locgauss::paths {

// Strictly stable law with log-characteristic function
//   -t |c u|^beta (1 - i gamma sign(u) Phi),  Phi = tan(pi beta / 2)  (beta != 1)
//                                             Phi = -(2/pi) log|u|    (beta == 1).
// Under this convention beta = 2 gives N(0, 2 c^2 t); standard Brownian motion is c = 1/sqrt(2).
struct StableLaw {
  double beta = 2.0;
  double gamma = 0.0;
  double c = 1.0;

  void validate() const;
};

// Square-root variance process with double-exponential compound-Poisson jumps in the price:
//   dX = sqrt(V) dW + jumps,   dV = kappa (theta - V) dt + xi sqrt(V) dB,   Corr(W, B) = rho.
// Defaults are the calibrated Monte Carlo design (unit of time: one trading day).
struct SvJumpDiffusionParams {
  double kappa = 0.03;
  double theta = 1.0;
  double xi = 0.1;
  double rho = -0.5;
  double jump_intensity = 0.5;
  double jump_scale = 0.4472;
  double v0 = 1.0;
  int substeps = 10;  // full-truncation Euler steps per observation interval

  void validate() const;
};

// Symmetric tempered stable martingale with Levy density A exp(-lambda |x|) / |x|^(1 + alpha),
// run on the business clock T_t = int_0^t V_s ds with V from `time_change`.
struct TemperedStableParams {
  double A = 0.1089;
  double lambda_tempering = 1.0;
  double alpha_ts = 1.8;
  SvJumpDiffusionParams time_change{};
  // Jumps with |x| <= cutoff_scale * (1/n)^(1/alpha) are replaced by a Gaussian with matched
  // variance; larger ones are simulated exactly.
  double cutoff_scale = 0.05;

  void validate() const;
  // int x^2 nu(dx) = 2 A Gamma(2 - alpha) lambda^(alpha - 2)
  double variance_per_unit_time() const;
};

struct PathGrid {
  int days = 1;
  int n = 2;

  void validate() const;
};

struct SamplePath {
  DayMatrix increments;                      // days x n
  std::optional<DayMatrix> latent_spot_var;  // sigma^2 at left endpoints

  Eigen::Index days() const { return increments.rows(); }
  Eigen::Index n() const { return increments.cols(); }
};

SamplePath simulate_sv_jump_diffusion(const SvJumpDiffusionParams& params, const PathGrid& grid,
                                      std::uint64_t seed);

SamplePath simulate_tempered_stable_tc(const TemperedStableParams& params, const PathGrid& grid,
                                       std::uint64_t seed);

// i.i.d. stable increments over intervals of length 1/n (Chambers-Mallows-Stuck).
SamplePath simulate_stable(const StableLaw& law, const PathGrid& grid, std::uint64_t seed);

// Observes X + eps on the grid, eps i.i.d. N(0, sigma_eps^2), so each day's increments pick up
// eps_i - eps_{i-1}.
SamplePath add_noise(const SamplePath& path, double sigma_eps, std::uint64_t seed);

// A single Chambers-Mallows-Stuck draw with the given law (time t = 1).
double draw_stable(const StableLaw& law, Engine& rng);

// Small-jump variance 2 A lambda^(alpha-2) gamma_lower(2 - alpha, lambda eps) of the tempered
// stable Levy measure restricted to |x| <= eps.
double tempered_small_jump_variance(const TemperedStableParams& params, double eps);

}  // namespace locgauss::paths
