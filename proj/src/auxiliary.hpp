#pragma once

#include <memory>

#include "lagrangeforge/eval.hpp"
#include "lagrangeforge/expr.hpp"
#include "lagrangeforge/lagrangian.hpp"

namespace lagrangeforge {

// Numerical solution of w'' = beta(t) w' + kappa(t) w exposed as functions
// that can be placed inside expression trees.
struct AuxiliaryPair {
  std::shared_ptr<const UnaryFunction> value;       // w
  std::shared_ptr<const UnaryFunction> derivative;  // w'
};

// Integrates from t0 with w(t0) = w0, w'(t0) = wd0 across `range` (which must
// contain t0). Throws kZeroCrossing when w stops being positive inside the range.
AuxiliaryPair solve_auxiliary(const Expr& beta, const Expr& kappa, double t0, double w0,
                              double wd0, Interval range);

}  // namespace lagrangeforge
