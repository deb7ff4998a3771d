#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "lagrangeforge/error.hpp"
#include "lagrangeforge/jet.hpp"

namespace lagrangeforge {

struct QuadratureConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_depth = 50;
  // Anchors of the antiderivative cache closer than this (relative to 1 + |u|)
  // to an existing anchor are not stored.
  double cache_resolution = 1e-6;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_depth < 10 || !(cache_resolution > 0.0)) {
      throw Error(ErrorCode::kSchema, "invalid quadrature configuration");
    }
  }
};

namespace gk15 {

// Gauss-Kronrod 7-15 abscissae on [-1, 1] (non-negative half) and weights.
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the 7-point rule, aligned with odd kNodes entries (1,3,5) and the center.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Segment {
  T kronrod;
  double error = 0.0;
};

template <class T, class F>
Segment<T> evaluate(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const T fc = f(center);
  T kronrod = kKronrodWeights[7] * fc;
  T gauss = kGaussWeights[3] * fc;
  for (std::size_t i = 0; i < 7; ++i) {
    const double dx = half * kNodes[i];
    const T sum = f(center - dx) + f(center + dx);
    kronrod = kronrod + kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss = gauss + kGaussWeights[i / 2] * sum;
  }
  Segment<T> s{half * kronrod, 0.0};
  s.error = norm_inf(half * (kronrod - gauss));
  return s;
}

template <class T, class F>
T refine(F& f, double a, double b, const Segment<T>& seg, double tol_density, int depth,
         int max_depth) {
  if (seg.error <= tol_density * (b - a) || seg.error == 0.0) return seg.kronrod;
  if (depth >= max_depth) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "quadrature exceeded max depth " << max_depth << " (suspected singularity); worst "
        << "subinterval [" << a << ", " << b << "], error estimate " << seg.error;
    throw Error(ErrorCode::kQuadratureFailure, msg.str());
  }
  const double mid = 0.5 * (a + b);
  const Segment<T> left = evaluate<T>(f, a, mid);
  const Segment<T> right = evaluate<T>(f, mid, b);
  return refine(f, a, mid, left, tol_density, depth + 1, max_depth) +
         refine(f, mid, b, right, tol_density, depth + 1, max_depth);
}

}  // namespace gk15

// Adaptive Gauss-Kronrod (7-15) with recursive bisection. The tolerance
// max(abs_tol, rel_tol * |I|) is distributed over subintervals by length.
template <class T, class F>
T integrate_adaptive(F&& f, double lo, double hi, const QuadratureConfig& cfg) {
  if (lo == hi) return T{};
  if (hi < lo) return -1.0 * integrate_adaptive<T>(f, hi, lo, cfg);
  const gk15::Segment<T> whole = gk15::evaluate<T>(f, lo, hi);
  const double tol = std::fmax(cfg.abs_tol, cfg.rel_tol * norm_inf(whole.kronrod));
  return gk15::refine(f, lo, hi, whole, tol / (hi - lo), 0, cfg.max_depth);
}

}  // namespace lagrangeforge
