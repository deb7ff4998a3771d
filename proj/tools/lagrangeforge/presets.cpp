#include "presets.hpp"

#include <map>

namespace lagrangeforge::cli {

namespace {

const std::vector<std::pair<std::string, std::string>>& presets() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"damped-oscillator", R"json({
  "schema_version": 1,
  "name": "damped-oscillator",
  "description": "x'' + gamma x' + omega0^2 x = 0; standard Lagrangian 1/2 e^(gamma t) (v^2 - omega0^2 x^2)",
  "parameters": {"gamma": 0.1, "omega0": 1},
  "equation": {"form": "standard", "b": "gamma", "c": "omega0^2*x"},
  "domain": {"x": [-1, 1], "v": [-1, 1], "t": [0, 2]},
  "builder": {"family": "standard"},
  "integration": {"x0": 1, "v0": 0, "t0": 0, "t1": 10},
  "tasks": ["classify", "build", "verify", "integrate"]
})json"},
      {"multiL", R"json({
  "schema_version": 1,
  "name": "multiL",
  "description": "x'' + k x' = 0 admits Lagrangians of every constructed form; all six are equivalent",
  "parameters": {"k": 0.5},
  "equation": {"form": "standard", "b": "k"},
  "domain": {"x": [-1, 1], "v": [0.2, 2], "t": [0, 2]},
  "lagrangians": [
    {"name": "L1", "builder": {"family": "standard"}},
    {"name": "L2", "expr": "1/(exp(2*k*t)*v + exp(k*t))"},
    {"name": "L3", "builder": {"family": "monomial", "exponent": 2.5}},
    {"name": "L4", "builder": {"family": "generalized-kinetic"}},
    {"name": "L5", "builder": {"family": "radical-equal", "exponent": 2, "s0": 1}},
    {"name": "LF", "builder": {"family": "exponential", "F": "0.5*xi^2"}}
  ],
  "integration": {"x0": 0, "v0": 1, "t0": 0, "t1": 2},
  "tasks": ["classify", "verify", "compare"]
})json"},
      {"accreting-mass", R"json({
  "schema_version": 1,
  "name": "accreting-mass",
  "description": "harmonic oscillator with mass m(t) = exp(beta t): L = 1/2 m v^2 - m V, H = p^2/(2m) + m V",
  "parameters": {"beta": 0.3, "omega": 1.5},
  "equation": {"form": "standard", "b": "beta", "c": "omega^2*x"},
  "domain": {"x": [-1, 1], "v": [-1, 1], "t": [0, 2]},
  "builder": {"family": "standard"},
  "integration": {"x0": 1, "v0": 0, "t0": 0, "t1": 5},
  "tasks": ["build", "verify", "integrate"]
})json"},
      {"lienard", R"json({
  "schema_version": 1,
  "name": "lienard",
  "description": "isochronous Lienard equation x'' + k x x' + k^2 x^3/9 + lambda1 x = 0, lambda1 = 2 k lambda / 9",
  "parameters": {"k": 1, "lambda": 1},
  "equation": {"form": "standard", "b": "k*x", "c": "k^2*x^3/9 + 2*k*lambda*x/9"},
  "domain": {"x": [-1, 1], "v": [-1, 1], "t": [0, 1]},
  "builder": {"family": "reciprocal-autonomous", "lambda": 1},
  "integration": {"x0": 0.5, "v0": 0, "t0": 0, "t1": 10},
  "tasks": ["classify", "build", "verify", "integrate"]
})json"},
      {"free-particle", R"json({
  "schema_version": 1,
  "name": "free-particle",
  "description": "x'' = 0 with L = v^2/2",
  "equation": {"form": "raw", "rhs": "0"},
  "builder": {"family": "standard"},
  "integration": {"x0": 0, "v0": 1, "t0": 0, "t1": 1},
  "tasks": ["classify", "build", "verify", "integrate"]
})json"},
      {"sarlet", R"json({
  "schema_version": 1,
  "name": "sarlet",
  "description": "x'' + k x'^2 = 0: v (1 - ln v) e^(k x) is equivalent to v^2 e^(2 k x)",
  "parameters": {"k": 1},
  "equation": {"form": "standard", "a": "k"},
  "domain": {"x": [-1, 1], "v": [0.2, 2], "t": [0, 1]},
  "lagrangians": [
    {"name": "sarlet", "expr": "v*(1 - ln(v))*exp(k*x)"},
    {"name": "quadratic", "expr": "v^2*exp(2*k*x)"}
  ],
  "integration": {"x0": 0, "v0": 1, "t0": 0, "t1": 5},
  "tasks": ["verify", "integrate", "compare"]
})json"},
      {"airy", R"json({
  "schema_version": 1,
  "name": "airy",
  "description": "Airy equation x'' = t x with a reciprocal Lagrangian 1/(f v + g x), f = w^3",
  "equation": {"form": "linear", "b": "0", "c": "-t"},
  "domain": {"x": [-1, 1], "v": [-1, 1], "t": [0.1, 2]},
  "builder": {"family": "reciprocal-linear", "t0": 0.1},
  "verification": {"tol": 1e-5},
  "integration": {"x0": 1, "v0": 0, "t0": 0.1, "t1": 2},
  "tasks": ["classify", "build", "verify", "integrate"]
})json"},
      {"reciprocal-nu2", R"json({
  "schema_version": 1,
  "name": "reciprocal-nu2",
  "description": "x'' + k x' = 0 (k = 1) with L = 1/(e^(3 k t) v^2 + e^(k t))",
  "parameters": {"k": 1},
  "equation": {"form": "standard", "b": "k"},
  "domain": {"x": [-1, 1], "v": [-1, 1], "t": [0, 1]},
  "builder": {"family": "reciprocal-nu2"},
  "verification": {"tol": 1e-8},
  "integration": {"x0": 0, "v0": 1, "t0": 0, "t1": 3},
  "tasks": ["build", "verify", "integrate"]
})json"},
      {"relativistic", R"json({
  "schema_version": 1,
  "name": "relativistic",
  "description": "relativistic-like oscillator x'' = -omega^2 x (1 - v^2/c^2)^(3/2)",
  "parameters": {"omega": 1, "c": 2},
  "equation": {"form": "generalized-kinetic", "f": "-omega^2*x", "R": "(1 - v^2/c^2)^1.5"},
  "domain": {"x": [-1, 1], "v": [-1, 1], "t": [0, 1]},
  "builder": {"family": "generalized-kinetic"},
  "integration": {"x0": 1, "v0": 0, "t0": 0, "t1": 10},
  "tasks": ["build", "verify", "integrate"]
})json"},
      {"radical-power-friction", R"json({
  "schema_version": 1,
  "name": "radical-power-friction",
  "description": "x'' + b(t) x'^m = 0 with m = 4, i.e. the equal-exponent radical family with nu = m - 1",
  "equation": {"form": "radical-equal", "a": "0", "b": "1 + 0.5*t", "exponent": 3},
  "domain": {"x": [-1, 1], "v": [0.2, 2], "t": [0, 1]},
  "builder": {"family": "radical-equal", "s0": 5},
  "integration": {"x0": 0, "v0": 1, "t0": 0, "t1": 1},
  "tasks": ["classify", "build", "verify", "integrate"]
})json"},
      {"power-family", R"json({
  "schema_version": 1,
  "name": "power-family",
  "description": "x'' + k x'^2 = 0: L = v^n e^(n k x) for every n != 0, 1, and tanh of the invariant v e^(k x)",
  "parameters": {"k": 1},
  "equation": {"form": "standard", "a": "k"},
  "domain": {"x": [-1, 1], "v": [0.2, 1], "t": [0, 1]},
  "lagrangians": [
    {"name": "n=-1", "expr": "v^(-1)*exp(-k*x)"},
    {"name": "n=2", "expr": "v^2*exp(2*k*x)"},
    {"name": "n=3", "expr": "v^3*exp(3*k*x)"},
    {"name": "n=5", "expr": "v^5*exp(5*k*x)"},
    {"name": "tanh", "builder": {"family": "composed", "invariant": "v*exp(k*x)",
                                 "F": "(exp(2*xi) - 1)/(exp(2*xi) + 1)"}}
  ],
  "integration": {"x0": 0, "v0": 1, "t0": 0, "t1": 5},
  "tasks": ["verify", "integrate", "compare"]
})json"},
  };
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : presets()) names.push_back(name);
  return names;
}

std::optional<std::string> preset_text(const std::string& name) {
  for (const auto& [n, text] : presets()) {
    if (n == name) return text;
  }
  return std::nullopt;
}

}  // namespace lagrangeforge::cli
