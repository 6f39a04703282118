#include "locgauss/paths.hpp"

#include "locgauss/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace locgauss::paths {

namespace {

constexpr std::uint64_t kStreamSvDay = 0x51;
constexpr std::uint64_t kStreamTsDay = 0x52;
constexpr std::uint64_t kStreamStableDay = 0x53;
constexpr std::uint64_t kStreamNoiseDay = 0x54;

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

// Lower incomplete gamma by its power series; adequate for the small arguments used here.
double lower_incomplete_gamma(double s, double x) {
  if (x <= 0.0) return 0.0;
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= x / (s + k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return std::exp(s * std::log(x) - x) * sum;
}

// One full-truncation Euler substep of the variance process; returns the positive part used
// for the diffusion coefficient over the step.
struct CirStepper {
  const SvJumpDiffusionParams& p;
  double dt;
  double sqrt_dt;

  double step(double& v, double z_b) const {
    const double vp = v > 0.0 ? v : 0.0;
    v = v + p.kappa * (p.theta - vp) * dt + p.xi * std::sqrt(vp) * sqrt_dt * z_b;
    return vp;
  }
};

}  // namespace

void StableLaw::validate() const {
  require(beta > 0.0 && beta <= 2.0, "stable law: beta must lie in (0, 2]");
  require(gamma >= -1.0 && gamma <= 1.0, "stable law: gamma must lie in [-1, 1]");
  require(c > 0.0, "stable law: scale c must be positive");
}

void SvJumpDiffusionParams::validate() const {
  require(kappa >= 0.0, "sv jump-diffusion: kappa must be nonnegative");
  require(theta >= 0.0, "sv jump-diffusion: theta must be nonnegative");
  require(xi >= 0.0, "sv jump-diffusion: xi must be nonnegative");
  require(v0 >= 0.0, "sv jump-diffusion: v0 must be nonnegative");
  require(rho >= -1.0 && rho <= 1.0, "sv jump-diffusion: rho must lie in [-1, 1]");
  require(jump_intensity >= 0.0, "sv jump-diffusion: jump intensity must be nonnegative");
  require(jump_scale > 0.0, "sv jump-diffusion: jump scale must be positive");
  require(substeps >= 1, "sv jump-diffusion: substeps must be at least 1");
}

void TemperedStableParams::validate() const {
  require(A >= 0.0, "tempered stable: A must be nonnegative");
  require(lambda_tempering > 0.0, "tempered stable: tempering rate must be positive");
  require(alpha_ts > 0.0 && alpha_ts < 2.0, "tempered stable: alpha must lie in (0, 2)");
  require(cutoff_scale > 0.0, "tempered stable: cutoff scale must be positive");
  time_change.validate();
}

double TemperedStableParams::variance_per_unit_time() const {
  return 2.0 * A * std::tgamma(2.0 - alpha_ts) * std::pow(lambda_tempering, alpha_ts - 2.0);
}

void PathGrid::validate() const {
  require(days >= 1, "path grid: days must be at least 1");
  require(n >= 2, "path grid: n must be at least 2");
}

double tempered_small_jump_variance(const TemperedStableParams& params, double eps) {
  const double s = 2.0 - params.alpha_ts;
  return 2.0 * params.A * std::pow(params.lambda_tempering, params.alpha_ts - 2.0) *
         lower_incomplete_gamma(s, params.lambda_tempering * eps);
}

SamplePath simulate_sv_jump_diffusion(const SvJumpDiffusionParams& params, const PathGrid& grid,
                                      std::uint64_t seed) {
  params.validate();
  grid.validate();

  SamplePath out;
  out.increments.resize(grid.days, grid.n);
  out.latent_spot_var.emplace(grid.days, grid.n);

  const double h = 1.0 / grid.n;
  const CirStepper cir{params, h / params.substeps, std::sqrt(h / params.substeps)};
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);
  const double jumps_per_interval = params.jump_intensity * h;

  double v = params.v0;
  for (int d = 0; d < grid.days; ++d) {
    Engine rng = make_engine(seed, kStreamSvDay, static_cast<std::uint64_t>(d));
    NormalDist normal;
    std::exponential_distribution<double> jump_size(1.0 / params.jump_scale);
    std::poisson_distribution<int> jump_count(jumps_per_interval > 0.0 ? jumps_per_interval : 1.0);
    std::uniform_int_distribution<int> coin(0, 1);

    for (int i = 0; i < grid.n; ++i) {
      (*out.latent_spot_var)(d, i) = v > 0.0 ? v : 0.0;
      double dx = 0.0;
      for (int s = 0; s < params.substeps; ++s) {
        const double z_b = normal(rng);
        const double z_w = params.rho * z_b + rho_bar * normal(rng);
        const double vp = cir.step(v, z_b);
        dx += std::sqrt(vp) * cir.sqrt_dt * z_w;
      }
      if (jumps_per_interval > 0.0) {
        // Jump times are uniform within the interval; only their sum enters the increment.
        const int count = jump_count(rng);
        for (int k = 0; k < count; ++k) {
          const double size = jump_size(rng);
          dx += coin(rng) ? size : -size;
        }
      }
      out.increments(d, i) = dx;
    }
  }
  return out;
}

SamplePath simulate_tempered_stable_tc(const TemperedStableParams& params, const PathGrid& grid,
                                       std::uint64_t seed) {
  params.validate();
  grid.validate();

  const auto& tc = params.time_change;
  SamplePath out;
  out.increments.resize(grid.days, grid.n);
  out.latent_spot_var.emplace(grid.days, grid.n);

  const double h = 1.0 / grid.n;
  const double alpha = params.alpha_ts;
  const double eps = params.cutoff_scale * std::pow(h, 1.0 / alpha);
  const double small_sd_rate = std::sqrt(tempered_small_jump_variance(params, eps));
  // Dominating measure A |x|^(-1-alpha) on |x| > eps, thinned by exp(-lambda |x|).
  const double big_rate = 2.0 * params.A * std::pow(eps, -alpha) / alpha;
  const double inv_alpha = 1.0 / alpha;
  const CirStepper cir{tc, h / tc.substeps, std::sqrt(h / tc.substeps)};

  double v = tc.v0;
  for (int d = 0; d < grid.days; ++d) {
    Engine rng = make_engine(seed, kStreamTsDay, static_cast<std::uint64_t>(d));
    NormalDist normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int i = 0; i < grid.n; ++i) {
      double vp = v > 0.0 ? v : 0.0;
      (*out.latent_spot_var)(d, i) = vp;
      double clock = 0.0;
      for (int s = 0; s < tc.substeps; ++s) {
        const double left = cir.step(v, normal(rng));
        const double right = v > 0.0 ? v : 0.0;
        clock += 0.5 * (left + right) * cir.dt;
      }
      if (params.A == 0.0 || clock <= 0.0) {
        out.increments(d, i) = 0.0;
        continue;
      }
      double ds = small_sd_rate * std::sqrt(clock) * normal(rng);
      std::poisson_distribution<int> candidates(big_rate * clock);
      const int count = candidates(rng);
      for (int k = 0; k < count; ++k) {
        const double u = 1.0 - unif(rng);  // (0, 1]
        const double x = eps * std::pow(u, -inv_alpha);
        const double keep = unif(rng);
        const double lx = params.lambda_tempering * x;
        if (keep > 1.0 - lx && keep > std::exp(-lx)) continue;
        ds += unif(rng) < 0.5 ? x : -x;
      }
      out.increments(d, i) = ds;
    }
  }
  return out;
}

double draw_stable(const StableLaw& law, Engine& rng) {
  using std::numbers::pi;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  double V;
  do {
    V = pi * (unif(rng) - 0.5);
  } while (V <= -pi / 2);
  const double W = expo(rng);
  const double beta = law.beta;
  const double gamma = law.gamma;

  if (beta != 1.0) {
    const double t = gamma * std::tan(pi * beta / 2.0);
    const double B = std::atan(t) / beta;
    const double S = std::pow(1.0 + t * t, 1.0 / (2.0 * beta));
    const double x = S * std::sin(beta * (V + B)) / std::pow(std::cos(V), 1.0 / beta) *
                     std::pow(std::cos(V - beta * (V + B)) / W, (1.0 - beta) / beta);
    return law.c * x;
  }
  const double half_pi = pi / 2.0;
  const double x = (2.0 / pi) * ((half_pi + gamma * V) * std::tan(V) -
                                 gamma * std::log(half_pi * W * std::cos(V) / (half_pi + gamma * V)));
  return law.c * x + (2.0 / pi) * gamma * law.c * std::log(law.c);
}

SamplePath simulate_stable(const StableLaw& law, const PathGrid& grid, std::uint64_t seed) {
  law.validate();
  grid.validate();
  // The increment over an interval of length h has the same law with scale c h^(1/beta).
  StableLaw step = law;
  step.c = law.c * std::pow(1.0 / grid.n, 1.0 / law.beta);

  SamplePath out;
  out.increments.resize(grid.days, grid.n);
  for (int d = 0; d < grid.days; ++d) {
    Engine rng = make_engine(seed, kStreamStableDay, static_cast<std::uint64_t>(d));
    for (int i = 0; i < grid.n; ++i) out.increments(d, i) = draw_stable(step, rng);
  }
  return out;
}

SamplePath add_noise(const SamplePath& path, double sigma_eps, std::uint64_t seed) {
  require(sigma_eps >= 0.0, "add_noise: sigma_eps must be nonnegative");
  SamplePath out = path;
  if (sigma_eps == 0.0) return out;
  for (Eigen::Index d = 0; d < path.days(); ++d) {
    Engine rng = make_engine(seed, kStreamNoiseDay, static_cast<std::uint64_t>(d));
    NormalDist normal(0.0, sigma_eps);
    double prev = normal(rng);
    for (Eigen::Index i = 0; i < path.n(); ++i) {
      const double cur = normal(rng);
      out.increments(d, i) += cur - prev;
      prev = cur;
    }
  }
  return out;
}

}  // namespace locgauss::paths
