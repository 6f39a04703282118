#include "locgauss/cli.hpp"

#include "locgauss/errors.hpp"
#include "locgauss/limits.hpp"
#include "locgauss/montecarlo.hpp"
#include "locgauss/paths.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

namespace locgauss::cli {

namespace {

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

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string level_key(double level) { return fmt("%g", level); }

struct Tick {
  std::int64_t t;
  double price;
};

}  // namespace

void SessionGrid::validate() const {
  if (n < 1) throw DomainError("session grid: need at least one slot");
  if (!(open_ms >= 0 && close_ms > open_ms && close_ms <= 24LL * 3600 * 1000))
    throw DomainError("session grid: need 0 <= open < close <= 24:00");
}

std::int64_t SessionGrid::boundary(int s) const {
  return open_ms + (close_ms - open_ms) * s / n;
}

std::int64_t parse_time_ms(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3) return -1;
  if (!all_digits(parts[0]) || !all_digits(parts[1]) || parts[0].size() > 2 || parts[1].size() != 2)
    return -1;
  const int hh = std::stoi(parts[0]);
  const int mm = std::stoi(parts[1]);
  std::int64_t ms = 0;
  int ss = 0;
  if (parts.size() == 3) {
    const auto dot = parts[2].find('.');
    const std::string sec = parts[2].substr(0, dot);
    if (sec.size() != 2 || !all_digits(sec)) return -1;
    ss = std::stoi(sec);
    if (dot != std::string::npos) {
      std::string frac = parts[2].substr(dot + 1);
      if (frac.empty() || frac.size() > 3 || !all_digits(frac)) return -1;
      while (frac.size() < 3) frac += '0';
      ms = std::stoi(frac);
    }
  }
  if (hh > 24 || mm > 59 || ss > 59) return -1;
  const std::int64_t total = ((hh * 60LL + mm) * 60 + ss) * 1000 + ms;
  if (total > 24LL * 3600 * 1000) return -1;
  return total;
}

std::string format_time_ms(std::int64_t ms) {
  char buf[32];
  const auto s = ms / 1000;
  if (ms % 1000 == 0) {
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(s / 3600),
                  static_cast<long long>(s / 60 % 60), static_cast<long long>(s % 60));
  } else {
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%03lld", static_cast<long long>(s / 3600),
                  static_cast<long long>(s / 60 % 60), static_cast<long long>(s % 60),
                  static_cast<long long>(ms % 1000));
  }
  return buf;
}

IngestResult ingest_csv(std::istream& in, const SessionGrid& grid) {
  grid.validate();
  IngestResult out;
  out.returns.resize(0, grid.n);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) {
    out.warnings.push_back("empty input: no records");
    return out;
  }
  ++lineno;
  if (trim(line) != "date,time,price")
    throw ParseError("expected header 'date,time,price'", lineno);

  std::vector<std::string> order;
  std::map<std::string, std::vector<Tick>> days;
  std::map<std::string, std::size_t> last_line;
  std::string current;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw ParseError("expected 3 fields date,time,price", lineno);
    if (f[0].empty()) throw ParseError("empty date", lineno);
    const std::int64_t t = parse_time_ms(f[1]);
    if (t < 0) throw ParseError("malformed time '" + f[1] + "'", lineno);
    double price = 0.0;
    try {
      std::size_t used = 0;
      price = std::stod(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::logic_error&) {
      throw ParseError("malformed price '" + f[2] + "'", lineno);
    }
    if (!(price > 0.0) || !std::isfinite(price))
      throw DataError("line " + std::to_string(lineno) + ": nonpositive price " + f[2]);
    auto [it, inserted] = days.try_emplace(f[0]);
    if (inserted) {
      order.push_back(f[0]);
    } else if (f[0] != current) {
      throw DataError("line " + std::to_string(lineno) + ": records of " + f[0] +
                      " are not contiguous");
    }
    current = f[0];
    if (!it->second.empty() && t <= it->second.back().t)
      throw DataError("line " + std::to_string(lineno) + ": " +
                      (t == it->second.back().t ? "duplicate" : "non-increasing") + " timestamp " +
                      f[1] + " on " + f[0] + " (previous record at line " +
                      std::to_string(last_line[f[0]]) + ")");
    it->second.push_back({t, price});
    last_line[f[0]] = lineno;
  }
  if (order.empty()) {
    out.warnings.push_back("empty input: no records");
    return out;
  }

  std::vector<std::vector<double>> kept;
  for (const auto& date : order) {
    const auto& ticks = days[date];
    std::vector<double> sampled(static_cast<std::size_t>(grid.n) + 1);
    bool complete = true;
    std::size_t pos = 0;  // first tick after the previous boundary
    for (int s = 0; s <= grid.n && complete; ++s) {
      const std::int64_t b = grid.boundary(s);
      std::size_t next = pos;
      while (next < ticks.size() && ticks[next].t <= b) ++next;
      // The open needs any tick at or before it; every later slot needs a fresh tick.
      if (next == pos && (s > 0 || next == 0)) complete = false;
      else sampled[static_cast<std::size_t>(s)] = ticks[next - 1].price;
      pos = next;
    }
    if (!complete) {
      out.dropped_days.push_back(date);
      continue;
    }
    out.dates.push_back(date);
    kept.push_back(std::move(sampled));
  }
  DayMatrix prices(static_cast<Eigen::Index>(kept.size()), grid.n + 1);
  for (std::size_t d = 0; d < kept.size(); ++d)
    for (int s = 0; s <= grid.n; ++s) prices(static_cast<Eigen::Index>(d), s) = kept[d][static_cast<std::size_t>(s)];
  out.returns = returns_from_prices(prices);
  if (!out.dropped_days.empty())
    out.warnings.push_back(std::to_string(out.dropped_days.size()) + " day(s) dropped for missing slots");
  return out;
}

IngestResult ingest_csv(const std::string& path, const SessionGrid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return ingest_csv(in, grid);
}

DiurnalAdjusted diurnal_adjust(const DayMatrix& returns) {
  if (returns.rows() < 2) throw DomainError("diurnal_adjust: need at least 2 days");
  if (returns.cols() < 1) throw DomainError("diurnal_adjust: no slots");
  Vector f = returns.array().square().colwise().mean().transpose().sqrt();
  for (Eigen::Index s = 0; s < f.size(); ++s)
    if (!(f(s) > 0.0))
      throw DegenerateSlotError("diurnal_adjust: slot " + std::to_string(s + 1) +
                                " has zero returns on every day");
  f /= std::sqrt(f.array().square().mean());
  DiurnalAdjusted out;
  out.returns = returns.array().rowwise() / f.transpose().array();
  out.profile.factors = std::move(f);
  return out;
}

DayMatrix prices_from_increments(const DayMatrix& increments, double first_price) {
  if (!(first_price > 0.0)) throw DomainError("prices_from_increments: first price must be positive");
  DayMatrix p(increments.rows(), increments.cols() + 1);
  double level = std::log(first_price);
  for (Eigen::Index d = 0; d < increments.rows(); ++d) {
    p(d, 0) = std::exp(level);
    for (Eigen::Index s = 0; s < increments.cols(); ++s) {
      level += increments(d, s);
      p(d, s + 1) = std::exp(level);
    }
  }
  return p;
}

DayMatrix returns_from_prices(const DayMatrix& prices) {
  if (prices.cols() < 2) return DayMatrix(prices.rows(), 0);
  DayMatrix r(prices.rows(), prices.cols() - 1);
  for (Eigen::Index d = 0; d < prices.rows(); ++d)
    for (Eigen::Index s = 0; s + 1 < prices.cols(); ++s)
      r(d, s) = std::log(prices(d, s + 1) / prices(d, s));
  return r;
}

void write_price_csv(std::ostream& out, const DayMatrix& prices,
                     const std::vector<std::string>& dates, const SessionGrid& grid) {
  grid.validate();
  if (prices.cols() != grid.n + 1) throw ShapeError("write_price_csv: need n + 1 prices per day");
  if (static_cast<std::size_t>(prices.rows()) != dates.size())
    throw ShapeError("write_price_csv: one date per day required");
  out << "date,time,price\n";
  char buf[64];
  for (Eigen::Index d = 0; d < prices.rows(); ++d) {
    for (int s = 0; s <= grid.n; ++s) {
      std::snprintf(buf, sizeof buf, "%.17g", prices(d, s));
      out << dates[static_cast<std::size_t>(d)] << ',' << format_time_ms(grid.boundary(s)) << ','
          << buf << '\n';
    }
  }
}

std::vector<std::string> synthetic_dates(int days, int first_year) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(std::max(days, 0)));
  char buf[16];
  for (int i = 0; i < days; ++i) {
    const int year = first_year + i / 252;
    const int month = i % 252 / 21 + 1;
    const int day = i % 21 + 1;
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    out.emplace_back(buf);
  }
  return out;
}

TestReport run_test(const DayMatrix& returns, const std::vector<std::string>& dates,
                    const TestOptions& options, critvals::CriticalValueCache* cache) {
  if (static_cast<std::size_t>(returns.rows()) != dates.size())
    throw ShapeError("run_test: one date per day required");
  if (returns.rows() == 0) throw DataError("run_test: no complete days to test");
  if (options.blocks < 1) throw UsageError("--blocks must be at least 1");
  const int n = static_cast<int>(returns.cols());
  const int k = n / options.blocks;
  const int m = static_cast<int>(std::floor(options.mn_ratio * k));
  const auto plan = spotvol::BlockPlan::make(n, k, m);

  TestReport report;
  report.n = n;
  report.k_n = k;
  report.m_n = m;

  // Groups in order of first appearance.
  std::vector<std::string> labels;
  std::map<std::string, std::vector<Eigen::Index>> members;
  for (std::size_t d = 0; d < dates.size(); ++d) {
    std::string g = "all";
    if (options.group_by_year) {
      g = dates[d].substr(0, 4);
      if (!all_digits(g)) throw DataError("cannot read a year from date '" + dates[d] + "'");
    }
    auto [it, inserted] = members.try_emplace(g);
    if (inserted) labels.push_back(g);
    it->second.push_back(static_cast<Eigen::Index>(d));
  }

  // Each group is one pooled sample of days * n increments, which sets the bias multiplier.
  std::vector<critvals::LimitLawConfig> configs;
  for (const auto& g : labels) {
    critvals::LimitLawConfig lc;
    lc.estimator_kind = options.estimator;
    lc.n = n * static_cast<int>(members[g].size());
    lc.k_n = k;
    lc.m_n = m;
    lc.eval_set = options.eval_set;
    lc.replications = options.critval_replications;
    configs.push_back(lc);
  }
  std::vector<bool> hits;
  const auto cvs = critvals::critical_values_batch(configs, options.levels, cache, &hits);
  report.cache_hit = std::all_of(hits.begin(), hits.end(), [](bool h) { return h; });

  for (std::size_t gi = 0; gi < labels.size(); ++gi) {
    const auto& rows = members[labels[gi]];
    DayMatrix block(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) block.row(static_cast<Eigen::Index>(i)) = returns.row(rows[i]);
    const auto curve = devol::ecdf_devol(block, plan, options.trunc, options.estimator);
    const auto ks = devol::ks_statistic(curve, limits::normal_cdf, options.eval_set);
    std::map<double, double> q;
    for (const auto& cv : cvs[gi]) q[cv.alpha] = cv.q;
    report.groups.push_back({labels[gi], static_cast<int>(rows.size()), devol::make_test_result(curve, ks, q)});
  }
  return report;
}

namespace {

nlohmann::json level_value(const std::map<double, double>& m, double level) {
  const auto it = m.find(level);
  return it == m.end() ? nlohmann::json(nullptr) : nlohmann::json(it->second);
}

nlohmann::json level_flag(const std::map<double, bool>& m, double level) {
  const auto it = m.find(level);
  return it == m.end() ? nlohmann::json(nullptr) : nlohmann::json(it->second);
}

}  // namespace

std::string report_json(const TestReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  j["k_n"] = report.k_n;
  j["m_n"] = report.m_n;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : report.groups) {
    const auto& r = g.result;
    nlohmann::json e;
    e["group"] = g.group;
    e["days"] = g.days;
    e["statistic"] = r.statistic;
    e["n_kept"] = r.n_kept;
    e["kept_fraction"] = r.kept_fraction;
    e["q05"] = level_value(r.critical_values, 0.05);
    e["q01"] = level_value(r.critical_values, 0.01);
    e["reject05"] = level_flag(r.reject, 0.05);
    e["reject01"] = level_flag(r.reject, 0.01);
    nlohmann::json cv = nlohmann::json::object();
    for (const auto& [level, q] : r.critical_values)
      cv[level_key(level)] = {{"q", q}, {"reject", r.reject.at(level)}};
    e["critical_values"] = cv;
    j["groups"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::string report_csv(const TestReport& report) {
  std::ostringstream out;
  out << "group,days,n,k_n,m_n,statistic,n_kept,kept_fraction,level,q,reject\n";
  char buf[256];
  for (const auto& g : report.groups) {
    for (const auto& [level, q] : g.result.critical_values) {
      std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%.17g,%zu,%.17g,%g,%.17g,%d\n",
                    g.group.c_str(), g.days, report.n, report.k_n, report.m_n, g.result.statistic,
                    g.result.n_kept, g.result.kept_fraction, level, q,
                    g.result.reject.at(level) ? 1 : 0);
      out << buf;
    }
  }
  return out.str();
}

namespace {

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  for (const auto& v : split(text, ',')) {
    try {
      out.push_back(std::stod(v));
    } catch (const std::logic_error&) {
      throw UsageError("bad level '" + v + "'");
    }
    if (!(out.back() > 0.0 && out.back() < 1.0)) throw UsageError("levels must lie in (0, 1)");
  }
  if (out.empty()) throw UsageError("no levels given");
  return out;
}

spotvol::EstimatorKind parse_estimator(const std::string& s) {
  if (s == "bipower") return spotvol::EstimatorKind::bipower;
  if (s == "truncated") return spotvol::EstimatorKind::truncated;
  throw UsageError("unknown estimator '" + s + "' (bipower|truncated)");
}

std::string default_cache_path() {
  const char* dir = std::getenv("LOCGAUSS_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return "";
  return std::string(dir) + "/critvals.cache";
}

struct CacheHandle {
  std::string path;
  critvals::CriticalValueCache cache;
  critvals::CriticalValueCache* get() { return path.empty() ? nullptr : &cache; }
  void save() const {
    if (!path.empty()) cache.save(path);
  }
};

CacheHandle open_cache(const std::string& flag) {
  CacheHandle h;
  h.path = flag.empty() ? default_cache_path() : flag;
  if (!h.path.empty()) h.cache = critvals::CriticalValueCache::load(h.path);
  return h;
}

// Simulated days under one of the named models.
DayMatrix simulate_days(const std::string& model, int n, int days, std::uint64_t seed) {
  if (model == "brownian") {
    // Characteristic function exp(-c^2 u^2 h) at beta = 2, so c = 1/sqrt(2) is a standard BM.
    paths::StableLaw law{2.0, 0.0, 1.0 / std::numbers::sqrt2};
    return paths::simulate_stable(law, paths::PathGrid{days, n}, seed).increments;
  }
  montecarlo::Experiment e;
  e.model = montecarlo::parse_model(model);
  e.n = n;
  e.days = days;
  e.seed = seed;
  return montecarlo::simulate_replication(e, 0).increments;
}

struct TestArgs {
  std::string input;
  std::string simulate;
  int n = 0;
  int days = 252;
  std::string session_open = "09:30";
  std::string session_close = "16:00";
  std::string diurnal = "auto";
  int blocks = 2;
  double mn_ratio = 0.75;
  double alpha_trunc = 3.0;
  double varpi = 0.49;
  std::string estimator = "bipower";
  std::string eval_set;
  std::string levels = "0.01,0.05";
  std::string group_by = "year";
  std::uint64_t seed = 1;
  std::string out = "json";
  int critval_reps = 100000;
  std::string cache;
};

SessionGrid make_session(const std::string& open, const std::string& close, int n) {
  SessionGrid g;
  g.open_ms = parse_time_ms(open);
  g.close_ms = parse_time_ms(close);
  if (g.open_ms < 0 || g.close_ms < 0) throw UsageError("bad session time");
  g.n = n;
  g.validate();
  return g;
}

int cmd_test(const TestArgs& a, std::ostream& out, std::ostream& err) {
  if (a.input.empty() == a.simulate.empty())
    throw UsageError("exactly one of --input and --simulate is required");
  if (a.blocks < 1) throw UsageError("--blocks must be at least 1");
  if (a.n < 2) throw UsageError("--n must be at least 2");
  if (a.group_by != "year" && a.group_by != "all") throw UsageError("--group-by must be year or all");
  if (a.out != "json" && a.out != "csv") throw UsageError("--out must be json or csv");
  if (a.diurnal != "auto" && a.diurnal != "on" && a.diurnal != "off")
    throw UsageError("--diurnal must be auto, on or off");

  TestOptions o;
  o.blocks = a.blocks;
  o.mn_ratio = a.mn_ratio;
  o.trunc = {a.alpha_trunc, a.varpi};
  o.estimator = parse_estimator(a.estimator);
  if (!a.eval_set.empty()) o.eval_set = devol::EvalSet::parse_quantile_pairs(a.eval_set);
  o.levels = parse_levels(a.levels);
  o.group_by_year = a.group_by == "year";
  o.critval_replications = a.critval_reps;
  o.seed = a.seed;

  DayMatrix returns;
  std::vector<std::string> dates;
  bool adjust = false;
  if (!a.input.empty()) {
    auto ing = ingest_csv(a.input, make_session(a.session_open, a.session_close, a.n));
    for (const auto& w : ing.warnings) err << "warning: " << w << "\n";
    for (const auto& d : ing.dropped_days) err << "dropped day " << d << "\n";
    returns = std::move(ing.returns);
    dates = std::move(ing.dates);
    adjust = a.diurnal != "off";
  } else {
    if (a.days < 1) throw UsageError("--days must be positive");
    returns = simulate_days(a.simulate, a.n, a.days, a.seed);
    dates = synthetic_dates(a.days);
    adjust = a.diurnal == "on";
  }
  if (adjust) returns = diurnal_adjust(returns).returns;

  auto cache = open_cache(a.cache);
  const auto report = run_test(returns, dates, o, cache.get());
  err << "critical values: " << (report.cache_hit ? "cache hit" : "cache miss, simulated") << "\n";
  if (!report.cache_hit) cache.save();
  out << (a.out == "json" ? report_json(report) : report_csv(report));
  return 0;
}

struct CritArgs {
  int n = 100;
  int days = 252;
  int blocks = 2;
  double mn_ratio = 0.75;
  std::string estimator = "bipower";
  std::string eval_set;
  std::string levels = "0.01,0.05";
  int reps = 100000;
  std::uint64_t seed = 20240601;
  double grid_step = 0.001;
  bool no_bridge = false;
  std::string cache;
};

int cmd_critvals(const CritArgs& a, std::ostream& out, std::ostream& err) {
  if (a.blocks < 1) throw UsageError("--blocks must be at least 1");
  if (a.days < 1) throw UsageError("--days must be positive");
  critvals::LimitLawConfig c;
  c.estimator_kind = parse_estimator(a.estimator);
  c.n = a.n * a.days;
  c.k_n = a.n / a.blocks;
  c.m_n = static_cast<int>(std::floor(a.mn_ratio * c.k_n));
  if (!a.eval_set.empty()) c.eval_set = devol::EvalSet::parse_quantile_pairs(a.eval_set);
  c.replications = a.reps;
  c.seed = a.seed;
  c.grid_step = a.grid_step;
  c.bridge_correction = !a.no_bridge;
  auto cache = open_cache(a.cache);
  bool hit = false;
  const auto cvs = critvals::critical_values(c, parse_levels(a.levels), cache.get(), &hit);
  err << (hit ? "cache hit " : "cache miss, simulated ") << critvals::hash_hex(c.hash()) << "\n";
  if (!hit) cache.save();
  out << "hash,n,days,k_n,m_n,alpha,q\n";
  char buf[160];
  for (const auto& cv : cvs) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%g,%.6f\n", critvals::hash_hex(cv.config_hash).c_str(),
                  a.n, a.days, c.k_n, c.m_n, cv.alpha, cv.q);
    out << buf;
  }
  return 0;
}

struct McArgs {
  int table = 0;
  std::string config;
  int reps = 1000;
  std::uint64_t seed = 1;
  int critval_reps = 100000;
  std::string out;
  std::string cache;
};

}  // namespace

// One block per n, one column per k_n, one line per level.
std::string format_table_layout(const montecarlo::RejectionTable& table) {
  std::ostringstream os;
  std::vector<int> ns;
  for (const auto& r : table.rows)
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  os << "Rejection rate (%), Kolmogorov-Smirnov test\n";
  for (int n : ns) {
    std::vector<int> ks;
    std::vector<double> levels;
    for (const auto& r : table.rows) {
      if (r.n != n) continue;
      if (std::find(ks.begin(), ks.end(), r.k_n) == ks.end()) ks.push_back(r.k_n);
      if (std::find(levels.begin(), levels.end(), r.level) == levels.end()) levels.push_back(r.level);
    }
    std::sort(levels.begin(), levels.end());
    os << "Sampling frequency n=" << n << "\n";
    os << "            ";
    char buf[64];
    for (int k : ks) {
      std::snprintf(buf, sizeof buf, "%10s", ("k_n=" + std::to_string(k)).c_str());
      os << buf;
    }
    os << "\n";
    for (double level : levels) {
      std::snprintf(buf, sizeof buf, "alpha = %2g%% ", level * 100.0);
      os << buf;
      for (int k : ks) {
        for (const auto& r : table.rows) {
          if (r.n == n && r.k_n == k && r.level == level) {
            std::snprintf(buf, sizeof buf, "%10.1f", 100.0 * r.rate);
            os << buf;
          }
        }
      }
      os << "\n";
    }
  }
  return os.str();
}

namespace {

int cmd_montecarlo(const McArgs& a, std::ostream& out, std::ostream& err) {
  if ((a.table == 0) == a.config.empty()) throw UsageError("exactly one of --table and --config is required");
  std::vector<montecarlo::Experiment> exps;
  if (a.table != 0) {
    if (a.table < 1 || a.table > 3) throw UsageError("--table must be 1, 2 or 3");
    exps = montecarlo::table_experiments(a.table, a.reps, a.seed);
  } else {
    std::ifstream in(a.config);
    if (!in) throw IoError("cannot open " + a.config);
    exps = montecarlo::load_experiments(in);
  }
  auto cache = open_cache(a.cache);
  std::vector<critvals::LimitLawConfig> configs;
  for (auto& e : exps) {
    if (a.table != 0) e.critval_replications = a.critval_reps;
    e.validate();
    configs.push_back(e.limit_config());
  }
  // Levels may differ between config-file experiments only through the shared key, so ask per
  // distinct level list.
  std::vector<std::vector<critvals::CriticalValue>> cvs(exps.size());
  std::map<std::vector<double>, std::vector<std::size_t>> by_levels;
  for (std::size_t i = 0; i < exps.size(); ++i) by_levels[exps[i].levels].push_back(i);
  for (const auto& [levels, idx] : by_levels) {
    std::vector<critvals::LimitLawConfig> group;
    for (std::size_t i : idx) group.push_back(configs[i]);
    std::vector<bool> hits;
    const auto t0 = std::chrono::steady_clock::now();
    auto got = critvals::critical_values_batch(group, levels, cache.get(), &hits);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto n_hits = std::count(hits.begin(), hits.end(), true);
    err << "critical values: " << n_hits << " cache hit(s), " << hits.size() - n_hits
        << " simulated, " << fmt("%.1f", secs) << " s\n";
    for (std::size_t g = 0; g < idx.size(); ++g) cvs[idx[g]] = std::move(got[g]);
  }
  montecarlo::RejectionTable all;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const auto& e = exps[i];
    const auto t0 = std::chrono::steady_clock::now();
    const auto t = montecarlo::run_experiment(e, cvs[i]);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    err << montecarlo::to_string(e.model) << " n=" << e.n << " k_n=" << e.k_n << " m_n=" << e.m_n()
        << ": " << e.replications << " replications, " << t.failed_replications << " failed, "
        << fmt("%.1f", secs) << " s\n";
    all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
    all.failed_replications += t.failed_replications;
  }
  cache.save();
  if (!a.out.empty()) montecarlo::emit_table(all, a.out);
  out << format_table_layout(all);
  return 0;
}

struct SimArgs {
  std::string model = "null";
  int n = 78;
  int days = 252;
  std::uint64_t seed = 1;
  std::string output;
  std::string session_open = "09:30";
  std::string session_close = "16:00";
  double first_price = 100.0;
};

int cmd_simulate(const SimArgs& a, std::ostream& out, std::ostream& err) {
  if (a.days < 1) throw UsageError("--days must be positive");
  const auto grid = make_session(a.session_open, a.session_close, a.n);
  const auto inc = simulate_days(a.model, a.n, a.days, a.seed);
  const auto prices = prices_from_increments(inc, a.first_price);
  const auto dates = synthetic_dates(a.days);
  if (a.output.empty() || a.output == "-") {
    write_price_csv(out, prices, dates, grid);
  } else {
    std::ofstream f(a.output, std::ios::trunc);
    if (!f) throw IoError("cannot open " + a.output + " for writing");
    write_price_csv(f, prices, dates, grid);
    if (!f) throw IoError("failed writing " + a.output);
    err << "wrote " << a.days << " days to " << a.output << "\n";
  }
  return 0;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local Gaussianity test for high-frequency increments", "locgauss"};
  app.require_subcommand(1);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Run the test on a price file or simulated data");
  test->add_option("--input", ta.input, "CSV with header date,time,price");
  test->add_option("--simulate", ta.simulate, "null | pure_jump | pure_jump_noise | brownian");
  test->add_option("--n", ta.n, "Increments per day")->required();
  test->add_option("--days", ta.days, "Simulated days");
  test->add_option("--session-open", ta.session_open, "HH:MM[:SS]");
  test->add_option("--session-close", ta.session_close, "HH:MM[:SS]");
  test->add_option("--diurnal", ta.diurnal, "auto | on | off (auto: on for --input)");
  test->add_option("--blocks", ta.blocks, "Blocks per day J, k_n = floor(n / J)");
  test->add_option("--mn-ratio", ta.mn_ratio, "m_n = floor(ratio * k_n)");
  test->add_option("--alpha-trunc", ta.alpha_trunc, "Truncation multiplier");
  test->add_option("--varpi", ta.varpi, "Truncation exponent");
  test->add_option("--estimator", ta.estimator, "bipower | truncated");
  test->add_option("--eval-set", ta.eval_set, "Normal probability pairs, e.g. 0.01:0.40,0.60:0.99");
  test->add_option("--levels", ta.levels, "Comma separated test levels");
  test->add_option("--group-by", ta.group_by, "year | all");
  test->add_option("--seed", ta.seed, "Simulation seed");
  test->add_option("--out", ta.out, "json | csv");
  test->add_option("--critval-reps", ta.critval_reps, "Replications for critical values");
  test->add_option("--cache", ta.cache, "Critical-value cache file");

  CritArgs ca;
  auto* crit = app.add_subcommand("critvals", "Simulate or look up critical values");
  crit->add_option("--n", ca.n, "Increments per day");
  crit->add_option("--days", ca.days, "Days pooled into one test");
  crit->add_option("--blocks", ca.blocks);
  crit->add_option("--mn-ratio", ca.mn_ratio);
  crit->add_option("--estimator", ca.estimator);
  crit->add_option("--eval-set", ca.eval_set);
  crit->add_option("--levels", ca.levels);
  crit->add_option("--reps", ca.reps);
  crit->add_option("--seed", ca.seed);
  crit->add_option("--grid-step", ca.grid_step);
  crit->add_flag("--no-bridge", ca.no_bridge, "Read the sup off the grid only");
  crit->add_option("--cache", ca.cache);

  McArgs ma;
  auto* mc = app.add_subcommand("montecarlo", "Size and power tables");
  mc->add_option("--table", ma.table, "1 (size), 2 (power), 3 (power with noise)");
  mc->add_option("--config", ma.config, "key = value experiment file");
  mc->add_option("--reps", ma.reps, "Replications per cell (with --table)");
  mc->add_option("--seed", ma.seed);
  mc->add_option("--critval-reps", ma.critval_reps, "With --table");
  mc->add_option("--out", ma.out, "CSV output path");
  mc->add_option("--cache", ma.cache);

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "Write simulated prices as a tick CSV");
  sim->add_option("--model", sa.model, "null | pure_jump | pure_jump_noise | brownian");
  sim->add_option("--n", sa.n);
  sim->add_option("--days", sa.days);
  sim->add_option("--seed", sa.seed);
  sim->add_option("--output", sa.output, "Path, or - for stdout");
  sim->add_option("--session-open", sa.session_open);
  sim->add_option("--session-close", sa.session_close);
  sim->add_option("--first-price", sa.first_price);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (test->parsed()) return cmd_test(ta, out, err);
    if (crit->parsed()) return cmd_critvals(ca, out, err);
    if (mc->parsed()) return cmd_montecarlo(ma, out, err);
    if (sim->parsed()) return cmd_simulate(sa, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace locgauss::cli
