#include "locgauss/devol_ecdf.hpp"

#include "locgauss/limits.hpp"

#include <cstdio>
#include <sstream>

namespace locgauss::devol {

EvalSet::EvalSet(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw DomainError("evaluation set must contain at least one interval");
  std::sort(intervals_.begin(), intervals_.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw DomainError("evaluation set: every interval needs finite lo < hi");
    if (i > 0 && !(intervals_[i - 1].hi < iv.lo))
      throw DomainError("evaluation set: intervals must be disjoint");
  }
}

EvalSet EvalSet::from_quantiles(const std::vector<std::pair<double, double>>& prob_pairs) {
  std::vector<Interval> out;
  out.reserve(prob_pairs.size());
  for (const auto& [p_lo, p_hi] : prob_pairs)
    out.push_back({limits::normal_quantile(p_lo), limits::normal_quantile(p_hi)});
  return EvalSet(std::move(out));
}

EvalSet EvalSet::standard() { return from_quantiles({{0.01, 0.40}, {0.60, 0.99}}); }

EvalSet EvalSet::parse_quantile_pairs(const std::string& text) {
  std::vector<std::pair<double, double>> pairs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw DomainError("evaluation set: expected p_lo:p_hi, got '" + item + "'");
    try {
      std::size_t used = 0;
      const std::string lo = item.substr(0, colon), hi = item.substr(colon + 1);
      const double a = std::stod(lo, &used);
      if (used != lo.size()) throw std::invalid_argument(lo);
      const double b = std::stod(hi, &used);
      if (used != hi.size()) throw std::invalid_argument(hi);
      pairs.emplace_back(a, b);
    } catch (const std::logic_error&) {
      throw DomainError("evaluation set: cannot parse '" + item + "'");
    }
  }
  return from_quantiles(pairs);
}

bool EvalSet::contains(double x) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [x](const Interval& iv) { return iv.lo <= x && x <= iv.hi; });
}

double EvalSet::total_length() const {
  double s = 0.0;
  for (const auto& iv : intervals_) s += iv.hi - iv.lo;
  return s;
}

std::string EvalSet::describe() const {
  std::string out;
  char buf[96];
  for (const auto& iv : intervals_) {
    std::snprintf(buf, sizeof buf, "%s[%.17g,%.17g]", out.empty() ? "" : "u", iv.lo, iv.hi);
    out += buf;
  }
  return out;
}

}  // namespace locgauss::devol
