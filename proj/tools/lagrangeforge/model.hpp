#pragma once

#include <optional>
#include <string>
#include <vector>

#include "problem_spec.hpp"

namespace lagrangeforge::cli {

inline const std::vector<std::string>& all_families() {
  static const std::vector<std::string> families = {
      "standard",      "reciprocal-autonomous", "reciprocal-linear", "reciprocal-nu2",
      "monomial",      "power-damping",         "generalized-kinetic", "radical-equal",
      "radical-linear", "exponential",          "composed"};
  return families;
}

// The problem with every parameter substituted.
struct Problem {
  ProblemSpec spec;
  Expr rhs;      // x'' = rhs
  OdeSpec ode;   // built from the declared equation form
  DomainBox box;

  explicit Problem(ProblemSpec s);
  Expr parse(const std::string& text, bool one_variable = false) const;
};

struct Classification {
  std::string family;
  bool applicable = false;
  double residual = 0.0;   // admissibility residual (0 for purely structural matches)
  std::string detail;      // matched coefficients or the reason for rejection
};

std::vector<Classification> classify(const Problem& problem,
                                     const std::optional<BuilderSpec>& hint);

struct BuiltLagrangian {
  std::string name;
  Lagrangian lagrangian;
  std::optional<std::string> hamiltonian;  // closed-form H(x, p, t) for the standard family
  std::optional<double> constraint_residual;
};

// Runs the builder described by `b` for the problem's equation. Inapplicable
// structures raise Error(kInadmissible) with the reason.
BuiltLagrangian build_lagrangian(const Problem& problem, const BuilderSpec& b,
                                 const std::string& name);
BuiltLagrangian explicit_lagrangian(const Problem& problem, const LagrangianEntry& entry);

}  // namespace lagrangeforge::cli
