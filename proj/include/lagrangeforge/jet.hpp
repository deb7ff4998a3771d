#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include "lagrangeforge/expr.hpp"

namespace lagrangeforge {

// Value, gradient and Hessian over (x, v, t). The Hessian is stored as its six
// independent entries so symmetry holds by construction.
struct Jet2 {
  double value = 0.0;
  std::array<double, 3> grad{};
  std::array<double, 6> hess{};

  static constexpr std::size_t index(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    // (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
    return i == 0 ? j : (i == 1 ? 2 + j : 5);
  }

  double d(Variable a) const { return grad[static_cast<std::size_t>(a)]; }
  double dd(Variable a, Variable b) const {
    return hess[index(static_cast<std::size_t>(a), static_cast<std::size_t>(b))];
  }
  double& dd(Variable a, Variable b) {
    return hess[index(static_cast<std::size_t>(a), static_cast<std::size_t>(b))];
  }

  static Jet2 constant(double c) {
    Jet2 j;
    j.value = c;
    return j;
  }
  static Jet2 variable(Variable var, double value) {
    Jet2 j;
    j.value = value;
    j.grad[static_cast<std::size_t>(var)] = 1.0;
    return j;
  }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value + b.value;
  for (std::size_t i = 0; i < 3; ++i) r.grad[i] = a.grad[i] + b.grad[i];
  for (std::size_t i = 0; i < 6; ++i) r.hess[i] = a.hess[i] + b.hess[i];
  return r;
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value - b.value;
  for (std::size_t i = 0; i < 3; ++i) r.grad[i] = a.grad[i] - b.grad[i];
  for (std::size_t i = 0; i < 6; ++i) r.hess[i] = a.hess[i] - b.hess[i];
  return r;
}

inline Jet2 operator*(double s, const Jet2& a) {
  Jet2 r;
  r.value = s * a.value;
  for (std::size_t i = 0; i < 3; ++i) r.grad[i] = s * a.grad[i];
  for (std::size_t i = 0; i < 6; ++i) r.hess[i] = s * a.hess[i];
  return r;
}

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value * b.value;
  for (std::size_t i = 0; i < 3; ++i) r.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i; j < 3; ++j) {
      const std::size_t k = Jet2::index(i, j);
      r.hess[k] = a.value * b.hess[k] + b.value * a.hess[k] + a.grad[i] * b.grad[j] +
                  a.grad[j] * b.grad[i];
    }
  }
  return r;
}

// f(u) given f, f', f'' at u.value.
inline Jet2 chain(const Jet2& u, double f, double f1, double f2) {
  Jet2 r;
  r.value = f;
  for (std::size_t i = 0; i < 3; ++i) r.grad[i] = f1 * u.grad[i];
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i; j < 3; ++j) {
      const std::size_t k = Jet2::index(i, j);
      r.hess[k] = f2 * u.grad[i] * u.grad[j] + f1 * u.hess[k];
    }
  }
  return r;
}

inline double norm_inf(double a) { return std::fabs(a); }

inline double norm_inf(const Jet2& a) {
  double m = std::fabs(a.value);
  for (double g : a.grad) m = std::fmax(m, std::fabs(g));
  for (double h : a.hess) m = std::fmax(m, std::fabs(h));
  return m;
}

}  // namespace lagrangeforge
