#pragma once

// Data ingestion, time-of-day adjustment and the command-line front end.

#include "locgauss/core.hpp"
#include "locgauss/critvals.hpp"
#include "locgauss/devol_ecdf.hpp"
#include "locgauss/montecarlo.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace locgauss::cli {

// Trading session [open, close] split into n equal slots; times in milliseconds after midnight.
struct SessionGrid {
  std::int64_t open_ms = (9 * 60 + 30) * 60 * 1000;
  std::int64_t close_ms = 16 * 60 * 60 * 1000;
  int n = 78;

  void validate() const;
  // Slot boundary s = 0..n.
  std::int64_t boundary(int s) const;
};

// "HH:MM", "HH:MM:SS" or "HH:MM:SS.fff" to milliseconds; nullopt-like -1 on failure.
std::int64_t parse_time_ms(const std::string& text);
std::string format_time_ms(std::int64_t ms);

struct IngestResult {
  std::vector<std::string> dates;  // one per kept day
  DayMatrix returns;               // days x n log-returns
  std::vector<std::string> dropped_days;
  std::vector<std::string> warnings;
};

// Reads `date,time,price` records, samples the last price at or before each slot boundary and
// returns per-slot log-returns. Days with an empty slot are dropped and listed.
IngestResult ingest_csv(std::istream& in, const SessionGrid& grid);
IngestResult ingest_csv(const std::string& path, const SessionGrid& grid);

struct DiurnalProfile {
  Vector factors;  // f_s > 0 with mean(f_s^2) = 1
};

struct DiurnalAdjusted {
  DayMatrix returns;
  DiurnalProfile profile;
};

// f_s = sqrt(mean over days of r_{d,s}^2), renormalized to mean square one; returns r / f_s.
DiurnalAdjusted diurnal_adjust(const DayMatrix& returns);

// Price path implied by increments (log-price steps) starting at `first_price`; each day opens
// at the previous close.
DayMatrix prices_from_increments(const DayMatrix& increments, double first_price = 100.0);
// log(p_s / p_{s-1}) per slot; `prices` has n + 1 columns (open plus n boundaries).
DayMatrix returns_from_prices(const DayMatrix& prices);

// Writes prices as tick records exactly at the slot boundaries, 17 significant digits.
void write_price_csv(std::ostream& out, const DayMatrix& prices,
                     const std::vector<std::string>& dates, const SessionGrid& grid);

// Business-day labels YYYY-MM-DD with 252 days per year (12 months of 21 days).
std::vector<std::string> synthetic_dates(int days, int first_year = 2001);

struct TestOptions {
  int blocks = 2;
  double mn_ratio = 0.75;
  spotvol::TruncationConfig trunc{3.0, 0.49};
  spotvol::EstimatorKind estimator = spotvol::EstimatorKind::bipower;
  devol::EvalSet eval_set = devol::EvalSet::standard();
  std::vector<double> levels{0.01, 0.05};
  bool group_by_year = true;
  int critval_replications = 100000;
  std::uint64_t seed = 1;
};

struct GroupResult {
  std::string group;
  int days = 0;
  devol::TestResult result;
};

struct TestReport {
  int n = 0;
  int k_n = 0;
  int m_n = 0;
  std::vector<GroupResult> groups;
  bool cache_hit = false;
};

// Devolatilized KS test per group of days (calendar year or everything).
TestReport run_test(const DayMatrix& returns, const std::vector<std::string>& dates,
                    const TestOptions& options, critvals::CriticalValueCache* cache = nullptr);

std::string report_json(const TestReport& report);
std::string report_csv(const TestReport& report);

// Rejection rates in percent laid out like the published tables.
std::string format_table_layout(const montecarlo::RejectionTable& table);

// Entry point of the `locgauss` tool; args excludes the program name. Returns the exit code.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace locgauss::cli
