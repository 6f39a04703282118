#pragma once

#include "locgauss/critvals.hpp"
#include "locgauss/devol_ecdf.hpp"
#include "locgauss/paths.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace locgauss::montecarlo {

enum class Model { null_sv_jd, pure_jump_ts, pure_jump_ts_plus_noise };

const char* to_string(Model m);
Model parse_model(const std::string& name);

struct Experiment {
  Model model = Model::null_sv_jd;
  int n = 100;
  int k_n = 50;
  double m_n_ratio = 0.75;
  spotvol::TruncationConfig trunc{3.0, 0.49};
  spotvol::EstimatorKind estimator = spotvol::EstimatorKind::bipower;
  devol::EvalSet eval_set = devol::EvalSet::standard();
  int days = 252;
  int replications = 1000;
  std::uint64_t seed = 1;
  std::vector<double> levels{0.01, 0.05};
  double noise_sd = 0.1;  // noise variance 0.01
  int critval_replications = 100000;
  paths::SvJumpDiffusionParams sv{};
  paths::TemperedStableParams ts{};
  unsigned threads = 0;

  int m_n() const;
  void validate() const;
  critvals::LimitLawConfig limit_config() const;
};

struct RejectionRow {
  std::string model;
  int n = 0;
  int k_n = 0;
  int m_n = 0;
  double level = 0.0;
  double rate = 0.0;
  double se = 0.0;
  int reps = 0;
  std::uint64_t seed = 0;
};

struct RejectionTable {
  std::vector<RejectionRow> rows;
  int failed_replications = 0;
};

// Simulates one path for replication `rep` of the experiment.
paths::SamplePath simulate_replication(const Experiment& exp, std::uint64_t rep);

// Size/power study: each replication simulates `days` days, pools them into one test and
// compares against the simulated critical values. Replications whose statistic cannot be
// formed are counted in failed_replications and excluded from the rates.
RejectionTable run_experiment(const Experiment& exp,
                              critvals::CriticalValueCache* cache = nullptr);
// Same with critical values supplied by the caller (one per level, in level order).
RejectionTable run_experiment(const Experiment& exp,
                              const std::vector<critvals::CriticalValue>& cvs);

void write_table_csv(const RejectionTable& table, std::ostream& out);
void emit_table(const RejectionTable& table, const std::string& path);
RejectionTable parse_table_csv(std::istream& in);

// key = value experiment definition; see README for the schema. Produces one experiment per
// block length listed under k_n.
std::vector<Experiment> load_experiments(std::istream& in);

// Experiments behind the size (1), power (2) and power-under-noise (3) tables.
std::vector<Experiment> table_experiments(int table, int replications, std::uint64_t seed);

}  // namespace locgauss::montecarlo
