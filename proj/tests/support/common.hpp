#pragma once

#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <string_view>

#include "doctest.h"
#include "lagrangeforge/error.hpp"
#include "lagrangeforge/expr.hpp"

namespace lagrangeforge::testing {

// Runs `fn` and returns the code of the library error it throws.
inline ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a lagrangeforge::Error");
  return ErrorCode::kIo;
}

inline double rel_err(double a, double b) { return std::fabs(a - b) / (1.0 + std::fabs(b)); }

inline Expr px(std::string_view text, const std::set<std::string, std::less<>>& params = {}) {
  return parse_expression(text, params);
}

}  // namespace lagrangeforge::testing
