#pragma once

// Empirical CDF of devolatilized, jump-truncated high-frequency increments and the exact
// Kolmogorov-Smirnov type sup-distance over a union of compact intervals.

#include "locgauss/core.hpp"
#include "locgauss/errors.hpp"
#include "locgauss/spotvol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace locgauss::devol {

using spotvol::BlockPlan;
using spotvol::EstimatorKind;
using spotvol::TruncationConfig;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Finite union of disjoint closed intervals, stored in increasing order.
class EvalSet {
 public:
  EvalSet() = default;
  explicit EvalSet(std::vector<Interval> intervals);

  // Intervals [Q(p_lo), Q(p_hi)] with Q the standard normal quantile.
  static EvalSet from_quantiles(const std::vector<std::pair<double, double>>& prob_pairs);
  // [Q(0.01), Q(0.40)] u [Q(0.60), Q(0.99)]
  static EvalSet standard();
  // Parses "0.01:0.40,0.60:0.99" (probability pairs).
  static EvalSet parse_quantile_pairs(const std::string& text);

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool contains(double x) const;
  double total_length() const;
  std::string describe() const;

 private:
  std::vector<Interval> intervals_;
};

template <typename Scalar>
struct EcdfCurveT {
  std::vector<Scalar> kept_values;  // sorted standardized increments
  std::size_t n_kept = 0;
  std::size_t n_candidates = 0;  // days * J * m_n tested slots
  EstimatorKind denominators_used = EstimatorKind::bipower;
  BlockPlan plan{};

  // F(tau) = #{kept <= tau} / N
  double operator()(double tau) const {
    if (n_kept == 0) return 0.0;
    const auto it = std::upper_bound(kept_values.begin(), kept_values.end(), Scalar(tau));
    return static_cast<double>(it - kept_values.begin()) / static_cast<double>(n_kept);
  }
  // F(tau-) = #{kept < tau} / N
  double left_limit(double tau) const {
    if (n_kept == 0) return 0.0;
    const auto it = std::lower_bound(kept_values.begin(), kept_values.end(), Scalar(tau));
    return static_cast<double>(it - kept_values.begin()) / static_cast<double>(n_kept);
  }
  double kept_fraction() const {
    return n_candidates == 0 ? 0.0
                             : static_cast<double>(n_kept) / static_cast<double>(n_candidates);
  }
};
using EcdfCurve = EcdfCurveT<double>;

// Counts tested increments (first m_n of each block) that survive truncation:
//   bipower:   |x_i| <= alpha sqrt(V_j) n^-varpi
//   truncated: |x_i| <= alpha n^-varpi
template <typename Derived, typename Scalar>
std::size_t count_kept(const Eigen::MatrixBase<Derived>& x,
                       const spotvol::VolEstimates<Scalar>& vol, const BlockPlan& plan,
                       const TruncationConfig& trunc, EstimatorKind kind) {
  if (vol.kind != kind)
    throw DomainError(std::string("count_kept: volatility estimates are ") +
                      spotvol::to_string(vol.kind) + ", requested " + spotvol::to_string(kind));
  plan.validate();
  trunc.validate();
  if (vol.per_block.size() != plan.blocks())
    throw ShapeError("count_kept: volatility estimates do not match the block plan");
  const Scalar rate = Scalar(trunc.threshold(plan.n));
  std::size_t kept = 0;
  for (int j = 0; j < plan.blocks(); ++j) {
    const Scalar u = kind == EstimatorKind::bipower ? rate * std::sqrt(vol.per_block(j)) : rate;
    for (int r = 0; r < plan.m_n; ++r)
      if (std::abs(x(j * plan.k_n + r)) <= u) ++kept;
  }
  return kept;
}

namespace detail {

// Appends the standardized kept values of one day, in index order.
template <typename Derived>
void append_day(const Eigen::MatrixBase<Derived>& x, const BlockPlan& plan,
                const TruncationConfig& trunc, EstimatorKind kind,
                std::vector<typename Derived::Scalar>& out) {
  using Scalar = typename Derived::Scalar;
  const auto vol = spotvol::leave_out(x, plan, trunc, kind);
  const Scalar rate = Scalar(trunc.threshold(plan.n));
  const Scalar root_n = std::sqrt(Scalar(plan.n));
  for (int j = 0; j < plan.blocks(); ++j) {
    const Scalar u = kind == EstimatorKind::bipower ? rate * std::sqrt(vol.per_block(j)) : rate;
    for (int r = 0; r < plan.m_n; ++r) {
      const int i = j * plan.k_n + r;
      const Scalar v = x(i);
      if (!(std::abs(v) <= u)) continue;
      const Scalar denom = vol.leave_out(i);
      if (!(denom > Scalar(0)))
        throw DegenerateVolatilityError("zero leave-out volatility estimate in block " +
                                        std::to_string(j) + " at increment " + std::to_string(i));
      out.push_back(root_n * v / std::sqrt(denom));
    }
  }
}

}  // namespace detail

// Devolatilized empirical CDF of one day (a vector) or of several days (rows of a matrix,
// pooled). Each day is blocked separately with `plan`.
template <typename Derived>
EcdfCurveT<typename Derived::Scalar> ecdf_devol(const Eigen::MatrixBase<Derived>& increments,
                                                const BlockPlan& plan,
                                                const TruncationConfig& trunc,
                                                EstimatorKind kind) {
  using Scalar = typename Derived::Scalar;
  plan.validate();
  trunc.validate();
  EcdfCurveT<Scalar> curve;
  curve.plan = plan;
  curve.denominators_used = kind;
  if constexpr (Derived::IsVectorAtCompileTime) {
    detail::append_day(increments, plan, trunc, kind, curve.kept_values);
    curve.n_candidates = static_cast<std::size_t>(plan.tested());
  } else {
    if (increments.cols() < plan.n)
      throw ShapeError("ecdf_devol: days have " + std::to_string(increments.cols()) +
                       " increments, plan expects " + std::to_string(plan.n));
    for (Eigen::Index d = 0; d < increments.rows(); ++d)
      detail::append_day(increments.row(d).transpose(), plan, trunc, kind, curve.kept_values);
    curve.n_candidates = static_cast<std::size_t>(plan.tested()) *
                         static_cast<std::size_t>(increments.rows());
  }
  curve.n_kept = curve.kept_values.size();
  if (curve.n_kept == 0) throw EmptyStatisticError("no increment survived truncation");
  std::sort(curve.kept_values.begin(), curve.kept_values.end());
  return curve;
}

// Experimental: one curve per day instead of pooling.
template <typename Derived>
std::vector<EcdfCurveT<typename Derived::Scalar>> ecdf_devol_per_day(
    const Eigen::MatrixBase<Derived>& increments, const BlockPlan& plan,
    const TruncationConfig& trunc, EstimatorKind kind) {
  std::vector<EcdfCurveT<typename Derived::Scalar>> out;
  out.reserve(static_cast<std::size_t>(increments.rows()));
  for (Eigen::Index d = 0; d < increments.rows(); ++d)
    out.push_back(ecdf_devol(increments.row(d).transpose(), plan, trunc, kind));
  return out;
}

struct KsFragment {
  double sup_distance = 0.0;  // sup over the set of |F_n - reference|
  double statistic = 0.0;     // sqrt(N) * sup_distance
  std::size_t n_kept = 0;
  double argsup = 0.0;
};

// Exact sup of |F_n(tau) - G(tau)| over the eval set for continuous nondecreasing G. The sup
// of a step function against a continuous one on a closed interval is attained at an interval
// endpoint or at a jump point (from either side), so only those candidates are examined.
// Endpoints use right-continuous values; a kept value sitting on an endpoint contributes both
// one-sided limits.
template <typename Scalar, typename Reference>
KsFragment ks_statistic(const EcdfCurveT<Scalar>& curve, const Reference& reference,
                        const EvalSet& eval_set) {
  if (eval_set.intervals().empty()) throw DomainError("ks_statistic: empty evaluation set");
  if (curve.n_kept == 0) throw EmptyStatisticError("ks_statistic: empty curve");
  const auto& v = curve.kept_values;
  const double N = static_cast<double>(curve.n_kept);
  KsFragment out;
  out.n_kept = curve.n_kept;
  auto consider = [&](double tau, double f, double g) {
    const double d = std::abs(f - g);
    if (d > out.sup_distance) {
      out.sup_distance = d;
      out.argsup = tau;
    }
  };
  for (const auto& iv : eval_set.intervals()) {
    consider(iv.lo, curve(iv.lo), reference(iv.lo));
    consider(iv.hi, curve(iv.hi), reference(iv.hi));
    auto it = std::lower_bound(v.begin(), v.end(), Scalar(iv.lo));
    while (it != v.end() && static_cast<double>(*it) <= iv.hi) {
      const double x = static_cast<double>(*it);
      const auto below = static_cast<double>(it - v.begin());
      const auto last = std::upper_bound(it, v.end(), *it);
      // Left limits are paired with the reference just below x, which also makes the result
      // exact for step-function references jumping at x.
      consider(x, below / N, reference(std::nextafter(x, -HUGE_VAL)));
      consider(x, static_cast<double>(last - v.begin()) / N, reference(x));
      it = last;
    }
  }
  out.statistic = std::sqrt(N) * out.sup_distance;
  return out;
}

struct TestResult {
  double statistic = 0.0;
  std::size_t n_kept = 0;
  double kept_fraction = 0.0;
  std::map<double, double> critical_values;  // level -> q
  std::map<double, bool> reject;             // level -> statistic > q
};

template <typename Scalar>
TestResult make_test_result(const EcdfCurveT<Scalar>& curve, const KsFragment& ks,
                            const std::map<double, double>& critical_values) {
  TestResult r;
  r.statistic = ks.statistic;
  r.n_kept = curve.n_kept;
  r.kept_fraction = curve.kept_fraction();
  r.critical_values = critical_values;
  for (const auto& [level, q] : critical_values) r.reject[level] = ks.statistic > q;
  return r;
}

}  // namespace locgauss::devol
