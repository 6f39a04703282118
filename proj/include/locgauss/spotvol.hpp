#pragma once

// Block-local spot variance estimators (bipower and truncated variation) together with their
// per-increment leave-out versions. All functions take any Eigen dense vector expression and
// are templated on its scalar type.

#include "locgauss/core.hpp"
#include "locgauss/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace locgauss::spotvol {

enum class EstimatorKind { bipower, truncated };

inline const char* to_string(EstimatorKind k) {
  return k == EstimatorKind::bipower ? "bipower" : "truncated";
}

// A day of n increments split into J = floor(n / k_n) blocks of k_n increments; the first m_n
// increments of each block are tested. Trailing increments past J * k_n are ignored.
struct BlockPlan {
  int n = 0;
  int k_n = 0;
  int m_n = 0;

  static BlockPlan make(int n, int k_n, int m_n) {
    BlockPlan p{n, k_n, m_n};
    p.validate();
    return p;
  }

  void validate() const {
    if (k_n < 4) throw DomainError("block plan: k_n must be at least 4, got " + std::to_string(k_n));
    if (m_n < 1 || m_n > k_n)
      throw DomainError("block plan: m_n must lie in [1, k_n], got " + std::to_string(m_n));
    if (n < k_n) throw DomainError("block plan: need at least one full block (n >= k_n)");
  }

  int blocks() const { return n / k_n; }
  // Number of tested slots per day.
  int tested() const { return blocks() * m_n; }
};

struct TruncationConfig {
  double alpha = 3.0;
  double varpi = 0.49;

  void validate() const {
    if (!(alpha > 0.0)) throw DomainError("truncation: alpha must be positive");
    if (!(varpi > 0.0 && varpi < 0.5)) throw DomainError("truncation: varpi must lie in (0, 1/2)");
  }
  // alpha * n^(-varpi)
  double threshold(int n) const { return alpha * std::pow(static_cast<double>(n), -varpi); }
};

template <typename Scalar>
struct VolEstimates {
  EstimatorKind kind = EstimatorKind::bipower;
  VectorT<Scalar> per_block;  // J entries
  VectorT<Scalar> leave_out;  // J * k_n entries, or empty when not requested
  int floored = 0;            // leave-out values that came out negative and were set to 0
};

namespace detail {

template <typename Derived>
void check_length(const Eigen::MatrixBase<Derived>& x, const BlockPlan& plan) {
  plan.validate();
  const Eigen::Index need = static_cast<Eigen::Index>(plan.blocks()) * plan.k_n;
  if (x.size() < need)
    throw ShapeError("increment vector has " + std::to_string(x.size()) + " entries, plan needs " +
                     std::to_string(need));
}

template <typename Scalar>
Scalar floor_at_zero(Scalar v, int& floored) {
  if (v < Scalar(0)) {
    ++floored;
    return Scalar(0);
  }
  return v;
}

}  // namespace detail

// V_j = (pi/2) * n/(k_n - 1) * sum_{i=(j-1)k_n+2}^{j k_n} |x_{i-1}| |x_i|
template <typename Derived>
VolEstimates<typename Derived::Scalar> bipower_blocks(const Eigen::MatrixBase<Derived>& x,
                                                      const BlockPlan& plan) {
  using Scalar = typename Derived::Scalar;
  detail::check_length(x, plan);
  const int J = plan.blocks();
  const int k = plan.k_n;
  const Scalar scale = Scalar(std::numbers::pi / 2) * Scalar(plan.n) / Scalar(k - 1);

  VolEstimates<Scalar> out;
  out.kind = EstimatorKind::bipower;
  out.per_block.resize(J);
  for (int j = 0; j < J; ++j) {
    const int base = j * k;
    Scalar sum(0);
    for (int i = 1; i < k; ++i) sum += std::abs(x(base + i - 1)) * std::abs(x(base + i));
    out.per_block(j) = scale * sum;
  }
  return out;
}

// Adds the leave-out values V_j(i) for every i of every block:
//   first index:  (k-1)/(k-3) V_j - (pi/2) n/(k-3) |x_i||x_{i+1}|
//   interior:     (k-1)/(k-3) V_j - (pi/2) n/(k-3) (|x_{i-1}||x_i| + |x_i||x_{i+1}|)
//   last index:   (k-1)/(k-3) V_j - (pi/2) n/(k-3) |x_{i-1}||x_i|
template <typename Derived>
VolEstimates<typename Derived::Scalar> bipower_leave_out(const Eigen::MatrixBase<Derived>& x,
                                                         const BlockPlan& plan) {
  using Scalar = typename Derived::Scalar;
  auto out = bipower_blocks(x, plan);
  const int J = plan.blocks();
  const int k = plan.k_n;
  const Scalar ratio = Scalar(k - 1) / Scalar(k - 3);
  const Scalar pair_scale = Scalar(std::numbers::pi / 2) * Scalar(plan.n) / Scalar(k - 3);

  out.leave_out.resize(static_cast<Eigen::Index>(J) * k);
  for (int j = 0; j < J; ++j) {
    const int base = j * k;
    const Scalar vj = ratio * out.per_block(j);
    for (int r = 0; r < k; ++r) {
      const int i = base + r;
      Scalar pairs(0);
      if (r > 0) pairs += std::abs(x(i - 1)) * std::abs(x(i));
      if (r < k - 1) pairs += std::abs(x(i)) * std::abs(x(i + 1));
      out.leave_out(i) = detail::floor_at_zero(vj - pair_scale * pairs, out.floored);
    }
  }
  return out;
}

// C_j = (n/k_n) * sum over block of x_i^2 1(|x_i| <= alpha n^-varpi)
template <typename Derived>
VolEstimates<typename Derived::Scalar> truncated_blocks(const Eigen::MatrixBase<Derived>& x,
                                                        const BlockPlan& plan,
                                                        const TruncationConfig& trunc) {
  using Scalar = typename Derived::Scalar;
  detail::check_length(x, plan);
  trunc.validate();
  const int J = plan.blocks();
  const int k = plan.k_n;
  const Scalar u = Scalar(trunc.threshold(plan.n));
  const Scalar scale = Scalar(plan.n) / Scalar(k);

  VolEstimates<Scalar> out;
  out.kind = EstimatorKind::truncated;
  out.per_block.resize(J);
  for (int j = 0; j < J; ++j) {
    Scalar sum(0);
    for (int r = 0; r < k; ++r) {
      const Scalar v = x(j * k + r);
      if (std::abs(v) <= u) sum += v * v;
    }
    out.per_block(j) = scale * sum;
  }
  return out;
}

// C_j(i) = k_n/(k_n-1) C_j - n/(k_n-1) x_i^2 1(|x_i| <= alpha n^-varpi)
template <typename Derived>
VolEstimates<typename Derived::Scalar> truncated_leave_out(const Eigen::MatrixBase<Derived>& x,
                                                           const BlockPlan& plan,
                                                           const TruncationConfig& trunc) {
  using Scalar = typename Derived::Scalar;
  auto out = truncated_blocks(x, plan, trunc);
  const int J = plan.blocks();
  const int k = plan.k_n;
  const Scalar u = Scalar(trunc.threshold(plan.n));
  const Scalar ratio = Scalar(k) / Scalar(k - 1);
  const Scalar own = Scalar(plan.n) / Scalar(k - 1);

  out.leave_out.resize(static_cast<Eigen::Index>(J) * k);
  for (int j = 0; j < J; ++j) {
    const Scalar cj = ratio * out.per_block(j);
    for (int r = 0; r < k; ++r) {
      const int i = j * k + r;
      const Scalar v = x(i);
      const Scalar contrib = std::abs(v) <= u ? own * v * v : Scalar(0);
      out.leave_out(i) = detail::floor_at_zero(cj - contrib, out.floored);
    }
  }
  return out;
}

template <typename Derived>
VolEstimates<typename Derived::Scalar> leave_out(const Eigen::MatrixBase<Derived>& x,
                                                 const BlockPlan& plan,
                                                 const TruncationConfig& trunc,
                                                 EstimatorKind kind) {
  return kind == EstimatorKind::bipower ? bipower_leave_out(x, plan)
                                        : truncated_leave_out(x, plan, trunc);
}

}  // namespace locgauss::spotvol
