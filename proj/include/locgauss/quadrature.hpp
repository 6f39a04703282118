#pragma once

#include <array>
#include <cmath>
#include <queue>

namespace locgauss::quadrature {

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
Result gk15(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half), true};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b]: the subinterval with the
// largest error estimate is bisected until the summed estimate drops below `tol` or
// `max_intervals` is reached (then converged = false).
template <typename F>
Result integrate(const F& f, double a, double b, double tol, int max_intervals = 2000) {
  struct Piece {
    double a, b;
    Result r;
    bool operator<(const Piece& o) const { return r.error < o.r.error; }
  };
  std::priority_queue<Piece> heap;
  Result total = detail::gk15(f, a, b);
  heap.push({a, b, total});
  int pieces = 1;
  while (total.error > tol && pieces < max_intervals) {
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Result l = detail::gk15(f, worst.a, mid);
    const Result r = detail::gk15(f, mid, worst.b);
    total.value += l.value + r.value - worst.r.value;
    total.error += l.error + r.error - worst.r.error;
    heap.push({worst.a, mid, l});
    heap.push({mid, worst.b, r});
    ++pieces;
  }
  // Recompute from the pieces to shed accumulated cancellation in the running sums.
  Result out{0.0, 0.0, true};
  while (!heap.empty()) {
    out.value += heap.top().r.value;
    out.error += heap.top().r.error;
    heap.pop();
  }
  out.converged = out.error <= tol;
  return out;
}

}  // namespace locgauss::quadrature
