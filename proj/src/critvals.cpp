#include "locgauss/critvals.hpp"

#include "locgauss/errors.hpp"
#include "locgauss/limits.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace locgauss::critvals {

namespace {

constexpr std::uint64_t kStreamSupDraw = 0xC1;
constexpr std::uint64_t kStreamProcessDraw = 0xC2;
constexpr std::uint64_t kStreamRefine = 0xC3;

// Brownian bridge on [0, 1] at increasing points u (all in (0, 1)); root_du holds
// sqrt(u[i] - u[i-1]) with u[-1] = 0, followed by sqrt(1 - u.back()).
void draw_bridge(const std::vector<double>& u, const std::vector<double>& root_du, Engine& rng,
                 NormalDist& z, double* out) {
  double w = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    w += root_du[i] * z(rng);
    out[i] = w;
  }
  const double w1 = w + root_du[u.size()] * z(rng);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] -= u[i] * w1;
}

std::vector<double> root_steps(const std::vector<double>& u) {
  std::vector<double> r(u.size() + 1);
  double prev = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    r[i] = std::sqrt(u[i] - prev);
    prev = u[i];
  }
  r[u.size()] = std::sqrt(1.0 - prev);
  return r;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

double bipower_constant() {
  using std::numbers::pi;
  return (pi / 2) * (pi / 2) + pi - 3.0;
}

double bias_term(double tau, EstimatorKind kind) {
  const double d1 = limits::normal_pdf(tau);
  const double d2 = -tau * d1;
  const double shape = tau * tau * d2 - tau * d1;
  return kind == EstimatorKind::bipower ? shape / 8.0 * bipower_constant() : shape / 4.0;
}

double z2_shape(double tau, EstimatorKind kind) {
  const double g = tau * limits::normal_pdf(tau);
  return kind == EstimatorKind::bipower ? 0.5 * g * std::sqrt(bipower_constant()) : g;
}

void LimitLawConfig::validate() const {
  if (k_n < 1 || m_n < 1 || m_n > k_n || n < k_n)
    throw DomainError("limit law: need 1 <= m_n <= k_n <= n");
  if (replications < 1000) throw DomainError("limit law: at least 1000 replications required");
  if (!(grid_step > 0.0 && grid_step < 1.0)) throw DomainError("limit law: grid step must lie in (0, 1)");
  if (eval_set.intervals().empty()) throw DomainError("limit law: empty evaluation set");
}

double LimitLawConfig::resolved_z2_weight() const {
  return z2_weight ? *z2_weight : std::sqrt(static_cast<double>(m_n) / k_n);
}

double LimitLawConfig::resolved_bias_weight() const {
  return bias_weight ? *bias_weight
                     : std::sqrt(static_cast<double>(m_n) / k_n) * std::sqrt(static_cast<double>(n)) / k_n;
}

std::string LimitLawConfig::canonical() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "kind=%s;n=%d;k=%d;m=%d;reps=%d;step=%.17g;seed=%llu;w2=%.17g;wb=%.17g;bridge=%d;A=",
                spotvol::to_string(estimator_kind), n, k_n, m_n, replications, grid_step,
                static_cast<unsigned long long>(seed), resolved_z2_weight(), resolved_bias_weight(),
                bridge_correction ? 1 : 0);
  return buf + eval_set.describe();
}

std::uint64_t LimitLawConfig::hash() const { return fnv1a(canonical()); }

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

TauGrid make_grid(const devol::EvalSet& eval_set, double phi_step) {
  TauGrid g;
  int seg = 0;
  for (const auto& iv : eval_set.intervals()) {
    const double ua = limits::normal_cdf(iv.lo);
    const double ub = limits::normal_cdf(iv.hi);
    const int steps = std::max(1, static_cast<int>(std::ceil((ub - ua) / phi_step)));
    for (int s = 0; s <= steps; ++s) {
      double tau;
      if (s == 0) {
        tau = iv.lo;
      } else if (s == steps) {
        tau = iv.hi;
      } else {
        tau = limits::normal_quantile(ua + (ub - ua) * s / steps);
      }
      const double u = limits::normal_cdf(tau);
      // Points with Phi(tau) numerically 0 or 1 carry no bridge variance; keep them strictly inside.
      if (!(u > 0.0 && u < 1.0)) continue;
      if (!g.u.empty() && !(u > g.u.back())) continue;
      g.tau.push_back(tau);
      g.u.push_back(u);
      g.segment.push_back(seg);
    }
    ++seg;
  }
  if (g.u.empty()) throw DomainError("limit law: degenerate grid (no interior points)");
  return g;
}

namespace {

// Uniform on (0, 1] addressed by (replication seed, interval); lets any subset of intervals be
// refined without disturbing the other draws.
double keyed_uniform(std::uint64_t rep_seed, std::size_t interval) {
  const std::uint64_t bits = derive_seed(rep_seed, kStreamRefine, interval) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

std::string draw_key(const LimitLawConfig& c) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d;%.17g;%llu;", c.replications, c.grid_step,
                static_cast<unsigned long long>(c.seed));
  return buf + c.eval_set.describe();
}

}  // namespace

std::vector<double> simulate_sup_limit(const LimitLawConfig& config) {
  return std::move(simulate_sup_limits({config}).front());
}

std::vector<std::vector<double>> simulate_sup_limits(const std::vector<LimitLawConfig>& configs) {
  if (configs.empty()) return {};
  for (const auto& c : configs) {
    c.validate();
    if (draw_key(c) != draw_key(configs.front()))
      throw DomainError("simulate_sup_limits: configs differ in eval set, grid, replications or seed");
  }
  const LimitLawConfig& base = configs.front();
  const TauGrid grid = make_grid(base.eval_set, base.grid_step);
  const auto K = static_cast<Eigen::Index>(grid.u.size());
  const std::vector<double> root_du = root_steps(grid.u);
  Eigen::ArrayXd du_inv = Eigen::ArrayXd::Zero(K);  // 0 marks a gap between intervals
  std::vector<double> du(grid.u.size(), 0.0);
  for (Eigen::Index i = 0; i + 1 < K; ++i) {
    const auto j = static_cast<std::size_t>(i);
    if (grid.segment[j] != grid.segment[j + 1]) continue;
    du[j] = grid.u[j + 1] - grid.u[j];
    du_inv(i) = 1.0 / du[j];
  }

  const std::size_t C = configs.size();
  std::vector<Eigen::ArrayXd> shape(C, Eigen::ArrayXd(K)), drift(C, Eigen::ArrayXd(K));
  for (std::size_t c = 0; c < C; ++c) {
    const double w2 = configs[c].resolved_z2_weight();
    const double wb = configs[c].resolved_bias_weight();
    for (Eigen::Index i = 0; i < K; ++i) {
      const double tau = grid.tau[static_cast<std::size_t>(i)];
      shape[c](i) = w2 * z2_shape(tau, configs[c].estimator_kind);
      drift[c](i) = wb * bias_term(tau, configs[c].estimator_kind);
    }
  }

  const auto reps = static_cast<std::size_t>(base.replications);
  std::vector<std::vector<double>> sups(C, std::vector<double>(reps));
  parallel_for(
      reps,
      [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(base.seed, kStreamSupDraw, r);
        Engine rng(rep_seed);
        NormalDist z;
        thread_local Eigen::ArrayXd bridge, y;
        bridge.resize(K);
        draw_bridge(grid.u, root_du, rng, z, bridge.data());
        const double zeta = z(rng);
        for (std::size_t c = 0; c < C; ++c) {
          y = bridge + zeta * shape[c] + drift[c];
          double sup = y.abs().maxCoeff();
          if (configs[c].bridge_correction) {
            for (Eigen::Index i = 0; i + 1 < K; ++i) {
              if (du_inv(i) == 0.0) continue;
              double a = y(i), b = y(i + 1);
              if (a + b < 0.0) {
                a = -a;
                b = -b;
              }
              // Given the endpoints, the path in between is a Brownian bridge of duration du
              // (smooth terms are linear at this resolution); its maximum exceeds s with
              // probability exp(-2 (s - a)(s - b) / du).
              if (2.0 * (sup - a) * (sup - b) * du_inv(i) > 45.0) continue;
              const double d = du[static_cast<std::size_t>(i)];
              const double uniform = keyed_uniform(rep_seed, static_cast<std::size_t>(i));
              sup = std::max(sup, 0.5 * (a + b + std::sqrt((b - a) * (b - a) - 2.0 * d * std::log(uniform))));
            }
          }
          sups[c][r] = sup;
        }
      },
      base.threads);
  return sups;
}

LimitDraws sample_limit_process(EstimatorKind kind, const std::vector<double>& taus,
                                int replications, std::uint64_t seed) {
  if (taus.empty() || replications < 1) throw DomainError("sample_limit_process: empty request");
  std::vector<double> u(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    u[i] = limits::normal_cdf(taus[i]);
    if (!(u[i] > 0.0 && u[i] < 1.0) || (i > 0 && !(u[i] > u[i - 1])))
      throw DomainError("sample_limit_process: taus must be strictly increasing and finite");
  }
  const std::vector<double> root_u = root_steps(u);
  LimitDraws out;
  const auto K = static_cast<Eigen::Index>(taus.size());
  out.z1.resize(replications, K);
  out.z2.resize(replications, K);
  std::vector<double> row(taus.size());
  for (int r = 0; r < replications; ++r) {
    Engine rng = make_engine(seed, kStreamProcessDraw, static_cast<std::uint64_t>(r));
    NormalDist z;
    draw_bridge(u, root_u, rng, z, row.data());
    const double zeta = z(rng);
    for (Eigen::Index i = 0; i < K; ++i) {
      out.z1(r, i) = row[static_cast<std::size_t>(i)];
      out.z2(r, i) = zeta * z2_shape(taus[static_cast<std::size_t>(i)], kind);
    }
  }
  return out;
}

CriticalValue critical_value(std::vector<double> sup_draws, double alpha,
                             std::uint64_t config_hash) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("critical_value: alpha must lie in (0, 1)");
  if (sup_draws.empty()) throw DomainError("critical_value: no draws");
  const double pos = (1.0 - alpha) * static_cast<double>(sup_draws.size() - 1);
  // "higher": the order statistic at or just above the interpolation position.
  auto idx = static_cast<std::size_t>(std::ceil(pos - 1e-9));
  idx = std::min(idx, sup_draws.size() - 1);
  std::nth_element(sup_draws.begin(), sup_draws.begin() + static_cast<std::ptrdiff_t>(idx),
                   sup_draws.end());
  return {alpha, sup_draws[idx], config_hash};
}

double resolution_self_check(const LimitLawConfig& config, double alpha) {
  LimitLawConfig fine = config;
  fine.grid_step = config.grid_step / 2.0;
  const double coarse_q = critical_value(simulate_sup_limit(config), alpha).q;
  const double fine_q = critical_value(simulate_sup_limit(fine), alpha).q;
  return std::abs(coarse_q - fine_q) / coarse_q;
}

CriticalValueCache CriticalValueCache::load(const std::string& path) {
  CriticalValueCache cache;
  std::ifstream in(path);
  if (!in) return cache;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string hex;
    double alpha = 0.0, q = 0.0;
    if (!(ss >> hex >> alpha >> q) || hex.size() != 16)
      throw ParseError("malformed critical-value cache entry in " + path, lineno);
    std::uint64_t h = 0;
    try {
      h = std::stoull(hex, nullptr, 16);
    } catch (const std::logic_error&) {
      throw ParseError("malformed config hash in " + path, lineno);
    }
    cache.entries_[{h, alpha}] = q;
  }
  return cache;
}

void CriticalValueCache::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write critical-value cache " + path);
  out << "# locgauss critical-value cache v1\n# <config hash> <alpha> <q>\n";
  char buf[128];
  for (const auto& [key, q] : entries_) {
    std::snprintf(buf, sizeof buf, "%s %.17g %.17g\n", hash_hex(key.first).c_str(), key.second, q);
    out << buf;
  }
  if (!out) throw IoError("failed writing critical-value cache " + path);
}

std::optional<double> CriticalValueCache::lookup(std::uint64_t hash, double alpha) const {
  const auto it = entries_.find({hash, alpha});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CriticalValueCache::store(const CriticalValue& cv) {
  entries_[{cv.config_hash, cv.alpha}] = cv.q;
}

std::vector<CriticalValue> critical_values(const LimitLawConfig& config,
                                           const std::vector<double>& alphas,
                                           CriticalValueCache* cache, bool* cache_hit) {
  std::vector<bool> hits;
  auto out = critical_values_batch({config}, alphas, cache, &hits);
  if (cache_hit) *cache_hit = hits.front();
  return std::move(out.front());
}

std::vector<std::vector<CriticalValue>> critical_values_batch(
    const std::vector<LimitLawConfig>& configs, const std::vector<double>& alphas,
    CriticalValueCache* cache, std::vector<bool>* cache_hits) {
  const std::size_t C = configs.size();
  std::vector<std::vector<CriticalValue>> out(C);
  std::vector<bool> hit(C, false);
  // Configs missing from the cache, grouped by the draws they can share.
  std::map<std::string, std::vector<std::size_t>> pending;
  for (std::size_t c = 0; c < C; ++c) {
    const std::uint64_t h = configs[c].hash();
    if (cache != nullptr) {
      for (double a : alphas) {
        const auto q = cache->lookup(h, a);
        if (!q) break;
        out[c].push_back({a, *q, h});
      }
      if (out[c].size() == alphas.size()) {
        hit[c] = true;
        continue;
      }
      out[c].clear();
    }
    pending[draw_key(configs[c])].push_back(c);
  }
  for (const auto& [key, members] : pending) {
    std::vector<LimitLawConfig> group;
    for (std::size_t c : members) group.push_back(configs[c]);
    const auto draws = simulate_sup_limits(group);
    for (std::size_t g = 0; g < members.size(); ++g) {
      const std::size_t c = members[g];
      for (double a : alphas) {
        out[c].push_back(critical_value(draws[g], a, configs[c].hash()));
        if (cache != nullptr) cache->store(out[c].back());
      }
    }
  }
  if (cache_hits) *cache_hits = hit;
  return out;
}

}  // namespace locgauss::critvals
