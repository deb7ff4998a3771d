#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lagrangeforge/expr.hpp"
#include "lagrangeforge/jet.hpp"
#include "lagrangeforge/quadrature.hpp"

namespace lagrangeforge {

struct Point {
  double x = 0.0;
  double v = 0.0;
  double t = 0.0;

  double operator[](Variable var) const {
    return var == Variable::kX ? x : (var == Variable::kV ? v : t);
  }
  double& operator[](Variable var) {
    return var == Variable::kX ? x : (var == Variable::kV ? v : t);
  }
};

struct Binding {
  Point point;
  std::vector<std::pair<std::string, double>> params;

  Binding() = default;
  Binding(double x, double v, double t) : point{x, v, t} {}
  explicit Binding(Point p) : point(p) {}

  Binding& with(std::string name, double value) {
    params.emplace_back(std::move(name), value);
    return *this;
  }
  // Throws Error(kUnknownIdentifier) when unbound.
  double param(std::string_view name) const;
};

// Antideriv nodes are evaluated by adaptive quadrature from their base point.
// Within one call, antiderivative values are memoized in a thread-local anchor
// cache so nested integrals reuse partial sums; the cache is reset on entry,
// so results never depend on call history or thread scheduling.
double eval(const Expr& e, const Binding& b, const QuadratureConfig& cfg = {});
Jet2 eval_jet2(const Expr& e, const Binding& b, const QuadratureConfig& cfg = {});

// Integral of `e` over `var` from lo to hi, other coordinates taken from `b`.
double definite_integral(const Expr& e, Variable var, double lo, double hi,
                         const QuadratureConfig& cfg = {}, const Binding& b = {});

}  // namespace lagrangeforge
