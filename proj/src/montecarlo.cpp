#include "locgauss/montecarlo.hpp"

#include "locgauss/errors.hpp"
#include "locgauss/limits.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace locgauss::montecarlo {

namespace {

constexpr std::uint64_t kStreamPath = 0xE1;
constexpr std::uint64_t kStreamNoise = 0xE2;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace

const char* to_string(Model m) {
  switch (m) {
    case Model::null_sv_jd:
      return "null_sv_jd";
    case Model::pure_jump_ts:
      return "pure_jump_ts";
    case Model::pure_jump_ts_plus_noise:
      return "pure_jump_ts_plus_noise";
  }
  return "?";
}

Model parse_model(const std::string& name) {
  if (name == "null_sv_jd" || name == "null") return Model::null_sv_jd;
  if (name == "pure_jump_ts" || name == "pure_jump") return Model::pure_jump_ts;
  if (name == "pure_jump_ts_plus_noise" || name == "pure_jump_noise")
    return Model::pure_jump_ts_plus_noise;
  throw DomainError("unknown model '" + name + "'");
}

int Experiment::m_n() const { return static_cast<int>(std::floor(m_n_ratio * k_n)); }

void Experiment::validate() const {
  if (m_n() < 1) throw DomainError("experiment: m_n = floor(ratio * k_n) must be at least 1");
  spotvol::BlockPlan::make(n, k_n, m_n());
  trunc.validate();
  if (days < 1 || replications < 1) throw DomainError("experiment: days and replications must be positive");
  if (levels.empty()) throw DomainError("experiment: no test levels");
  for (double l : levels)
    if (!(l > 0.0 && l < 1.0)) throw DomainError("experiment: levels must lie in (0, 1)");
  if (noise_sd < 0.0) throw DomainError("experiment: noise_sd must be nonnegative");
}

critvals::LimitLawConfig Experiment::limit_config() const {
  critvals::LimitLawConfig c;
  c.estimator_kind = estimator;
  // The pooled year is the sampling interval of the limit theory: n * days increments.
  c.n = n * days;
  c.k_n = k_n;
  c.m_n = m_n();
  c.eval_set = eval_set;
  c.replications = critval_replications;
  c.seed = seed;
  c.threads = threads;
  return c;
}

paths::SamplePath simulate_replication(const Experiment& exp, std::uint64_t rep) {
  const paths::PathGrid grid{exp.days, exp.n};
  const std::uint64_t path_seed = derive_seed(exp.seed, kStreamPath, rep);
  switch (exp.model) {
    case Model::null_sv_jd:
      return paths::simulate_sv_jump_diffusion(exp.sv, grid, path_seed);
    case Model::pure_jump_ts:
      return paths::simulate_tempered_stable_tc(exp.ts, grid, path_seed);
    case Model::pure_jump_ts_plus_noise:
      return paths::add_noise(paths::simulate_tempered_stable_tc(exp.ts, grid, path_seed),
                              exp.noise_sd, derive_seed(exp.seed, kStreamNoise, rep));
  }
  throw DomainError("unknown model");
}

RejectionTable run_experiment(const Experiment& exp, critvals::CriticalValueCache* cache) {
  exp.validate();
  return run_experiment(exp, critvals::critical_values(exp.limit_config(), exp.levels, cache));
}

RejectionTable run_experiment(const Experiment& exp, const std::vector<critvals::CriticalValue>& cvs) {
  exp.validate();
  if (cvs.empty()) throw DomainError("run_experiment: no critical values");
  const auto plan = spotvol::BlockPlan::make(exp.n, exp.k_n, exp.m_n());
  const auto reference = limits::normal_cdf;

  const auto reps = static_cast<std::size_t>(exp.replications);
  // Per replication: one reject flag per level; empty when the statistic could not be formed.
  std::vector<std::vector<char>> outcome(reps);
  parallel_for(
      reps,
      [&](std::size_t r) {
        try {
          const auto path = simulate_replication(exp, r);
          const auto curve = devol::ecdf_devol(path.increments, plan, exp.trunc, exp.estimator);
          const auto ks = devol::ks_statistic(curve, reference, exp.eval_set);
          for (const auto& cv : cvs) outcome[r].push_back(ks.statistic > cv.q ? 1 : 0);
        } catch (const std::runtime_error&) {
          outcome[r].clear();
        }
      },
      exp.threads);

  RejectionTable table;
  std::vector<int> rejects(cvs.size(), 0);
  for (const auto& row : outcome) {
    if (row.empty()) {
      ++table.failed_replications;
      continue;
    }
    for (std::size_t l = 0; l < cvs.size(); ++l) rejects[l] += row[l];
  }
  const int ok = exp.replications - table.failed_replications;
  for (std::size_t l = 0; l < cvs.size(); ++l) {
    RejectionRow row;
    row.model = to_string(exp.model);
    row.n = exp.n;
    row.k_n = exp.k_n;
    row.m_n = exp.m_n();
    row.level = cvs[l].alpha;
    row.rate = ok > 0 ? static_cast<double>(rejects[l]) / ok : 0.0;
    row.se = ok > 0 ? std::sqrt(row.rate * (1.0 - row.rate) / ok) : 0.0;
    row.reps = ok;
    row.seed = exp.seed;
    table.rows.push_back(row);
  }
  return table;
}

void write_table_csv(const RejectionTable& table, std::ostream& out) {
  out << "model,n,k_n,m_n,level,rate,se,reps,seed\n";
  char buf[256];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%.4f,%.4f,%.4f,%d,%llu\n", r.model.c_str(), r.n,
                  r.k_n, r.m_n, r.level, r.rate, r.se, r.reps,
                  static_cast<unsigned long long>(r.seed));
    out << buf;
  }
}

void emit_table(const RejectionTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_table_csv(table, out);
  if (!out) throw IoError("failed writing " + path);
}

RejectionTable parse_table_csv(std::istream& in) {
  RejectionTable table;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) return table;
  ++lineno;
  if (trim(line) != "model,n,k_n,m_n,level,rate,se,reps,seed")
    throw ParseError("unexpected rejection-table header", lineno);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw ParseError("expected 9 fields", lineno);
    try {
      RejectionRow r;
      r.model = f[0];
      r.n = std::stoi(f[1]);
      r.k_n = std::stoi(f[2]);
      r.m_n = std::stoi(f[3]);
      r.level = std::stod(f[4]);
      r.rate = std::stod(f[5]);
      r.se = std::stod(f[6]);
      r.reps = std::stoi(f[7]);
      r.seed = std::stoull(f[8]);
      table.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ParseError("malformed numeric field", lineno);
    }
  }
  return table;
}

std::vector<Experiment> load_experiments(std::istream& in) {
  Experiment base;
  std::vector<int> block_lengths;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "model") {
        base.model = parse_model(value);
      } else if (key == "n") {
        base.n = std::stoi(value);
      } else if (key == "k_n") {
        block_lengths.clear();
        for (const auto& v : split(value, ',')) block_lengths.push_back(std::stoi(v));
      } else if (key == "levels") {
        base.levels.clear();
        for (const auto& v : split(value, ',')) base.levels.push_back(std::stod(v));
      } else if (key == "reps") {
        base.replications = std::stoi(value);
      } else if (key == "seed") {
        base.seed = std::stoull(value);
      } else if (key == "days") {
        base.days = std::stoi(value);
      } else if (key == "m_n_ratio") {
        base.m_n_ratio = std::stod(value);
      } else if (key == "alpha_trunc") {
        base.trunc.alpha = std::stod(value);
      } else if (key == "varpi") {
        base.trunc.varpi = std::stod(value);
      } else if (key == "estimator") {
        if (value == "bipower") {
          base.estimator = spotvol::EstimatorKind::bipower;
        } else if (value == "truncated") {
          base.estimator = spotvol::EstimatorKind::truncated;
        } else {
          throw ParseError("unknown estimator '" + value + "'", lineno);
        }
      } else if (key == "eval_set") {
        base.eval_set = devol::EvalSet::parse_quantile_pairs(value);
      } else if (key == "noise_sd") {
        base.noise_sd = std::stod(value);
      } else if (key == "critval_reps") {
        base.critval_replications = std::stoi(value);
      } else {
        throw ParseError("unknown key '" + key + "'", lineno);
      }
    } catch (const std::logic_error& e) {
      throw ParseError("bad value for '" + key + "': " + e.what(), lineno);
    }
  }
  if (block_lengths.empty()) block_lengths.push_back(base.k_n);
  std::vector<Experiment> out;
  for (int k : block_lengths) {
    Experiment e = base;
    e.k_n = k;
    e.validate();
    out.push_back(e);
  }
  return out;
}

std::vector<Experiment> table_experiments(int table, int replications, std::uint64_t seed) {
  Model model;
  switch (table) {
    case 1:
      model = Model::null_sv_jd;
      break;
    case 2:
      model = Model::pure_jump_ts;
      break;
    case 3:
      model = Model::pure_jump_ts_plus_noise;
      break;
    default:
      throw DomainError("table must be 1, 2 or 3");
  }
  std::vector<Experiment> out;
  const std::vector<std::pair<int, std::vector<int>>> layout = {{100, {33, 50, 100}},
                                                                {200, {50, 67, 200}}};
  for (const auto& [n, ks] : layout) {
    for (int k : ks) {
      Experiment e;
      e.model = model;
      e.n = n;
      e.k_n = k;
      e.m_n_ratio = n == 100 ? 0.75 : 0.70;
      e.replications = replications;
      e.seed = seed;
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace locgauss::montecarlo
