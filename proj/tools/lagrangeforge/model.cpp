#include "model.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "lagrangeforge/error.hpp"

namespace lagrangeforge::cli {

namespace {

constexpr std::uint8_t kX = variable_bit(Variable::kX);
constexpr std::uint8_t kV = variable_bit(Variable::kV);
constexpr std::uint8_t kT = variable_bit(Variable::kT);

std::string fmt(double value) {
  std::ostringstream out;
  out.precision(6);
  out << value;
  return out.str();
}

// Rejection that carries the measured admissibility residual.
class Rejected : public Error {
 public:
  Rejected(const std::string& why, double residual)
      : Error(ErrorCode::kInadmissible, why), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

[[noreturn]] void inapplicable(const std::string& why,
                               double residual = std::numeric_limits<double>::quiet_NaN()) {
  throw Rejected(why, residual);
}

// Grid used for structural checks: the domain's tensor grid.
std::vector<Point> probe_points(const DomainBox& box) {
  DomainBox grid = box;
  grid.random_points = 0;
  grid.exclusions.clear();
  return grid.raw_points();
}

bool evaluable_zero(const Expr& e, const std::vector<Point>& pts, double tol = 1e-12) {
  for (const Point& p : pts) {
    double value;
    try {
      value = eval(e, Binding(p));
    } catch (const Error&) {
      return false;
    }
    if (!(std::fabs(value) <= tol)) return false;
  }
  return true;
}

bool is_zero(const Expr& e, const DomainBox& box) {
  if (e.is_constant()) return e.constant_value() == 0.0;
  return evaluable_zero(e, probe_points(box));
}

// Removes a dependence that is only symbolic (e.g. x - x); nullopt when the
// expression genuinely depends on a variable outside `allowed`.
std::optional<Expr> restrict_to(const Expr& e, std::uint8_t allowed, const DomainBox& box) {
  Expr out = e;
  const auto pts = probe_points(box);
  for (Variable var : kAllVariables) {
    if ((allowed & variable_bit(var)) || !out.depends_on(var)) continue;
    Expr d;
    try {
      d = differentiate(out, var);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (!evaluable_zero(d, pts, 1e-11)) return std::nullopt;
    const Interval iv = var == Variable::kX ? box.x : (var == Variable::kV ? box.v : box.t);
    out = substitute(out, var, constant(iv.mid()));
  }
  return out;
}

std::string vars_text(std::uint8_t mask) {
  std::string s;
  for (Variable var : kAllVariables) {
    if (mask & variable_bit(var)) s += (s.empty() ? "" : ", ") + std::string(variable_name(var));
  }
  return s.empty() ? "constants" : s;
}

Expr require_dep(const std::optional<Expr>& e, const std::string& name, std::uint8_t allowed) {
  if (!e) inapplicable("coefficient " + name + " must depend on " + vars_text(allowed) + " only");
  return *e;
}

// x'' + a v^2 + b v + c = 0.
struct Quadratic {
  Expr a, b, c;
};

std::optional<Quadratic> quadratic_of(const Problem& pr) {
  const EquationSpec& eq = pr.spec.equation;
  auto coef = [&](const char* key) {
    auto it = eq.coefficients.find(key);
    return it == eq.coefficients.end() ? constant(0.0) : pr.parse(it->second);
  };
  if (eq.form == "standard") return Quadratic{coef("a"), coef("b"), coef("c")};
  if (eq.form == "linear") {
    return Quadratic{constant(0.0), coef("b"), coef("c") * var(Variable::kX)};
  }
  if (eq.form == "affine") return Quadratic{constant(0.0), neg(coef("a")), neg(coef("b"))};
  // Generic decomposition of the right-hand side around v = 0.
  try {
    const Expr zero = constant(0.0);
    const Expr d1 = differentiate(pr.rhs, Variable::kV);
    const Expr d2 = differentiate(d1, Variable::kV);
    Quadratic q{-0.5 * substitute(d2, Variable::kV, zero), neg(substitute(d1, Variable::kV, zero)),
                neg(substitute(pr.rhs, Variable::kV, zero))};
    const Expr v = var(Variable::kV);
    const Expr remainder = pr.rhs + q.a * pow(v, 2.0) + q.b * v + q.c;
    DomainBox probe = pr.box;
    probe.random_points = 40;
    probe.exclusions.clear();
    for (const Point& p : probe.raw_points()) {
      const double scale = 1.0 + std::fabs(eval(pr.rhs, Binding(p)));
      if (!(std::fabs(eval(remainder, Binding(p))) <= 1e-9 * scale)) return std::nullopt;
    }
    return q;
  } catch (const Error&) {
    return std::nullopt;
  }
}

Quadratic require_quadratic(const Problem& pr) {
  auto q = quadratic_of(pr);
  if (!q) inapplicable("right-hand side is not quadratic in v");
  return *q;
}

double exponent_for(const Problem& pr, const BuilderSpec* b, const std::string& form,
                    double fallback) {
  const EquationSpec& eq = pr.spec.equation;
  if (eq.form == form && eq.exponent) {
    if (b && b->exponent && *b->exponent != *eq.exponent) {
      inapplicable("builder exponent " + fmt(*b->exponent) +
                   " differs from the equation's exponent " + fmt(*eq.exponent));
    }
    return *eq.exponent;
  }
  if (b && b->exponent) return *b->exponent;
  return fallback;
}

// Separable right-hand side R(v) f(x, t).
struct Separable {
  Expr f, r;
  double residual = 0.0;
};

Expr power_law_or(const Expr& r, const DomainBox& box) {
  // Recognises R(v) = v^p so that the closed-form kinetic terms apply.
  try {
    const double r1 = eval(r, Binding(0.0, 1.0, 0.0));
    const double r2 = eval(r, Binding(0.0, 2.0, 0.0));
    if (!(r1 > 0.0 && r2 > 0.0)) return r;
    const double p = std::log(r2 / r1) / std::log(2.0);
    const double pr = std::round(p * 1e9) / 1e9;
    for (const Point& q : probe_points(box)) {
      if (q.v <= 0.0) continue;
      const double expected = r1 * std::pow(q.v, pr);
      if (!(std::fabs(eval(r, Binding(q)) - expected) <= 1e-12 * (1.0 + std::fabs(expected)))) {
        return r;
      }
    }
    if (r1 != 1.0) return r;
    return pr == 1.0 ? var(Variable::kV) : pow(var(Variable::kV), pr);
  } catch (const Error&) {
    return r;
  }
}

std::optional<Separable> separable_of(const Problem& pr) {
  const EquationSpec& eq = pr.spec.equation;
  if (eq.form == "generalized-kinetic") {
    return Separable{pr.parse(eq.coefficients.at("f")), pr.parse(eq.coefficients.at("R")), 0.0};
  }
  const auto pts = probe_points(pr.box);
  const double v_ref = pr.box.v.contains(1.0) ? 1.0 : pr.box.v.hi;
  for (const Point& ref : pts) {
    Point anchor{ref.x, v_ref, ref.t};
    double r0;
    try {
      r0 = eval(pr.rhs, Binding(anchor));
    } catch (const Error&) {
      continue;
    }
    if (!(std::fabs(r0) > 1e-6)) continue;
    const Expr f = substitute(pr.rhs, Variable::kV, constant(v_ref));
    Expr r = substitute(substitute(pr.rhs, Variable::kX, constant(anchor.x)), Variable::kT,
                        constant(anchor.t)) /
             r0;
    Separable s{f, power_law_or(r, pr.box), 0.0};
    try {
      for (const Point& p : pts) {
        const double lhs = eval(pr.rhs, Binding(p));
        const double rhs = eval(s.f, Binding(p)) * eval(s.r, Binding(p));
        s.residual = std::fmax(s.residual, std::fabs(lhs - rhs) / (1.0 + std::fabs(lhs)));
      }
    } catch (const Error&) {
      return std::nullopt;
    }
    if (s.residual > 1e-10) return std::nullopt;
    return s;
  }
  return std::nullopt;
}

BuilderOptions options_from(const Problem& pr, const BuilderSpec& b) {
  BuilderOptions o;
  o.x0 = b.x0;
  o.t0 = b.t0;
  o.lambda = b.lambda;
  o.s0 = b.s0;
  o.b0 = b.b0;
  o.c0 = b.c0;
  if (b.q) o.q = pr.parse(*b.q);
  o.domain = pr.box;
  o.tol = pr.spec.verification_tol();
  o.printed_variant = b.printed_variant;
  return o;
}

// Plan for one family: admissibility residual plus the construction itself.
struct Plan {
  double residual = 0.0;
  std::string detail;
  std::function<BuiltLagrangian(const BuilderOptions&)> run;
};

Plan plan_for(const Problem& pr, const std::string& family, const BuilderSpec* b) {
  const DomainBox& box = pr.box;
  Plan plan;
  if (family == "standard") {
    const Quadratic q = require_quadratic(pr);
    for (const auto& [e, n] : {std::pair{q.a, "a"}, std::pair{q.b, "b"}, std::pair{q.c, "c"}}) {
      require_dep(restrict_to(e, kX | kT, box), n, kX | kT);
    }
    BuilderOptions o;
    o.domain = box;
    const auto adm = admissible_standard(q.a, q.b, q.c, o);
    plan.residual = adm.residual;
    plan.detail = "b_x - 2 a_t residual " + fmt(adm.residual);
    if (!adm.admissible) inapplicable("standard condition fails: " + adm.reason, adm.residual);
    plan.run = [q](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = build_standard(q.a, q.b, q.c, opts);
      out.hamiltonian = format(standard_hamiltonian(standard_coefficients(q.a, q.b, q.c, opts)));
      return out;
    };
  } else if (family == "reciprocal-autonomous") {
    const Quadratic q = require_quadratic(pr);
    const Expr a = require_dep(restrict_to(q.a, kX, box), "a", kX);
    const Expr bb = require_dep(restrict_to(q.b, kX, box), "b", kX);
    const Expr c = require_dep(restrict_to(q.c, kX, box), "c", kX);
    if (is_zero(bb, box)) inapplicable("coefficient b vanishes identically");
    const auto con = reciprocal_constraint(a, bb, c, box.x);
    plan.residual = con.residual;
    plan.detail = "reciprocal constraint residual " + fmt(con.residual);
    if (!con.admissible) inapplicable("reciprocal constraint fails: " + con.reason, con.residual);
    plan.run = [a, bb, c, res = con.residual](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = build_reciprocal_autonomous(a, bb, c, opts);
      out.constraint_residual = res;
      return out;
    };
  } else if (family == "reciprocal-linear") {
    const Quadratic q = require_quadratic(pr);
    if (!is_zero(q.a, box)) inapplicable("v^2 term present");
    const Expr bb = require_dep(restrict_to(q.b, kT, box), "b", kT);
    const Expr c = q.c;
    if (!is_zero(substitute(c, Variable::kX, constant(0.0)), box)) {
      inapplicable("c is not proportional to x");
    }
    Expr c1 = pr.spec.equation.form == "linear"
                  ? pr.parse(pr.spec.equation.coefficients.count("c")
                                 ? pr.spec.equation.coefficients.at("c")
                                 : "0")
                  : differentiate(c, Variable::kX);
    c1 = require_dep(restrict_to(c1, kT, box), "c/x", kT);
    plan.detail = "x'' + b(t) v + c(t) x = 0";
    plan.run = [bb, c1](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = build_reciprocal_linear(bb, c1, opts);
      return out;
    };
  } else if (family == "reciprocal-nu2") {
    const Quadratic q = require_quadratic(pr);
    const Expr a = require_dep(restrict_to(q.a, kX, box), "a", kX);
    const Expr bb = require_dep(restrict_to(q.b, kT, box), "b", kT);
    if (!is_zero(q.c, box)) inapplicable("force term c present");
    plan.detail = "x'' + a(x) v^2 + b(t) v = 0";
    plan.run = [a, bb](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = build_reciprocal_nu2(a, bb, opts);
      return out;
    };
  } else if (family == "monomial") {
    Expr a, bb, c;
    double mu;
    if (pr.spec.equation.form == "monomial") {
      const auto& co = pr.spec.equation.coefficients;
      auto get = [&](const char* k) { return co.count(k) ? pr.parse(co.at(k)) : constant(0.0); };
      a = get("a");
      bb = get("b");
      c = get("c");
      mu = exponent_for(pr, b, "monomial", 3.0);
    } else {
      const Quadratic q = require_quadratic(pr);
      a = q.a;
      bb = q.b;
      c = q.c;
      if (is_zero(c, box)) {
        mu = exponent_for(pr, b, "monomial", 3.0);
      } else {
        mu = 2.0;
        if (b && b->exponent && *b->exponent != 2.0) {
          inapplicable("a nonzero c term fixes the exponent to 2");
        }
      }
    }
    for (const auto& [e, n] : {std::pair{a, "a"}, std::pair{bb, "b"}, std::pair{c, "c"}}) {
      require_dep(restrict_to(e, kX | kT, box), n, kX | kT);
    }
    if (mu == 0.0 || mu == 1.0) inapplicable("exponent " + fmt(mu) + " gives a degenerate Lagrangian");
    BuilderOptions o;
    o.domain = box;
    const auto adm = admissible_monomial(a, bb, mu, o);
    plan.residual = adm.residual;
    plan.detail = "mu = " + fmt(mu) + ", (mu-1) b_x - mu a_t residual " + fmt(adm.residual);
    if (!adm.admissible) inapplicable("monomial condition fails: " + adm.reason, adm.residual);
    plan.run = [a, bb, c, mu](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = build_monomial(a, bb, c, mu, opts);
      return out;
    };
  } else if (family == "power-damping") {
    Expr a, c;
    double nu;
    if (pr.spec.equation.form == "power-damping") {
      const auto& co = pr.spec.equation.coefficients;
      a = co.count("a") ? pr.parse(co.at("a")) : constant(0.0);
      c = co.count("c") ? pr.parse(co.at("c")) : constant(0.0);
      nu = exponent_for(pr, b, "power-damping", 0.0);
    } else {
      const Quadratic q = require_quadratic(pr);
      if (!is_zero(q.b, box)) inapplicable("linear damping term present (nu = 1 is excluded)");
      a = q.a;
      c = q.c;
      nu = is_zero(c, box) ? exponent_for(pr, b, "power-damping", 3.0) : 0.0;
    }
    a = require_dep(restrict_to(a, kX, box), "a", kX);
    c = require_dep(restrict_to(c, kX, box), "c", kX);
    if (nu == 1.0 || nu == 2.0) inapplicable("exponent " + fmt(nu) + " is excluded");
    plan.detail = "x'' = -a(x) v^2 - c(x) v^" + fmt(nu);
    plan.run = [a, c, nu](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = build_power_damping(a, c, nu, opts);
      return out;
    };
  } else if (family == "generalized-kinetic") {
    const auto sep = separable_of(pr);
    if (!sep) inapplicable("right-hand side is not of the form R(v) f(x, t)");
    const Expr f = require_dep(restrict_to(sep->f, kX | kT, box), "f", kX | kT);
    const Expr r = require_dep(restrict_to(sep->r, kV, box), "R", kV);
    plan.residual = sep->residual;
    plan.detail = "R(v) = " + format(r) + ", f(x,t) = " + format(f);
    plan.run = [f, r](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = build_generalized_kinetic(f, r, opts);
      return out;
    };
  } else if (family == "radical-equal") {
    Expr a, bb;
    double nu;
    if (pr.spec.equation.form == "radical-equal") {
      const auto& co = pr.spec.equation.coefficients;
      a = co.count("a") ? pr.parse(co.at("a")) : constant(0.0);
      bb = co.count("b") ? pr.parse(co.at("b")) : constant(0.0);
      nu = exponent_for(pr, b, "radical-equal", 2.0);
    } else {
      const Quadratic q = require_quadratic(pr);
      if (!is_zero(q.c, box)) inapplicable("force term c present");
      if (!is_zero(q.a, box)) inapplicable("v^2 term corresponds to the excluded exponent nu = 1");
      a = q.b;
      bb = constant(0.0);
      nu = exponent_for(pr, b, "radical-equal", 2.0);
    }
    a = require_dep(restrict_to(a, kT, box), "a", kT);
    bb = require_dep(restrict_to(bb, kT, box), "b", kT);
    if (nu == 0.0 || nu == 1.0) inapplicable("exponent " + fmt(nu) + " is excluded");
    plan.detail = "x'' = -a(t) v - b(t) v^" + fmt(nu + 1.0);
    plan.run = [a, bb, nu](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = build_radical_equal(a, bb, nu, opts);
      return out;
    };
  } else if (family == "radical-linear" || family == "exponential") {
    const Quadratic q = require_quadratic(pr);
    if (!is_zero(q.a, box)) inapplicable("v^2 term present");
    const auto a = restrict_to(neg(q.b), kT, box);
    if (!a) inapplicable("damping coefficient depends on x");
    const auto bb = restrict_to(neg(q.c), kT, box);
    if (!bb) inapplicable("force term depends on x (c x term)");
    plan.detail = "x'' = a(t) v + b(t)";
    if (family == "radical-linear") {
      const double mu = b && b->exponent ? *b->exponent : 2.0;
      if (mu == 0.0 || mu == 1.0) inapplicable("exponent " + fmt(mu) + " is excluded");
      plan.run = [a = *a, bb = *bb, mu](const BuilderOptions& opts) {
        BuiltLagrangian out;
        out.lagrangian = build_radical_linear(a, bb, mu, opts);
        return out;
      };
    } else {
      const Expr F = b && b->F ? pr.parse(*b->F, true) : 0.5 * pow(var(kXi), 2.0);
      plan.run = [a = *a, bb = *bb, F](const BuilderOptions& opts) {
        BuiltLagrangian out;
        out.lagrangian = build_exponential_family(a, bb, F, opts);
        return out;
      };
    }
  } else if (family == "composed") {
    if (!b || !b->invariant || !b->F) {
      inapplicable("requires an invariant of motion and a function F(xi)");
    }
    const Expr inv = pr.parse(*b->invariant);
    const Expr F = pr.parse(*b->F, true);
    plan.detail = "F(I) with I = " + format(inv);
    const OdeSpec ode = pr.ode;
    plan.run = [inv, F, ode, box](const BuilderOptions& opts) {
      BuiltLagrangian out;
      out.lagrangian = compose_invariant(Lagrangian(inv, Family::kCustom, box), ode, F, opts);
      return out;
    };
  } else {
    throw Error(ErrorCode::kSchema, "unknown family " + family);
  }
  return plan;
}

}  // namespace

Problem::Problem(ProblemSpec s) : spec(std::move(s)), box(spec.domain.box()) {
  const EquationSpec& eq = spec.equation;
  auto coef = [&](const char* key) {
    auto it = eq.coefficients.find(key);
    return it == eq.coefficients.end() ? constant(0.0) : parse(it->second);
  };
  if (eq.form == "raw") {
    ode = OdeSpec::from_rhs(parse(*eq.rhs));
  } else if (eq.form == "standard") {
    ode = OdeSpec::standard(coef("a"), coef("b"), coef("c"));
  } else if (eq.form == "linear") {
    ode = OdeSpec::linear(coef("b"), coef("c"));
  } else if (eq.form == "monomial") {
    ode = OdeSpec::monomial(coef("a"), coef("b"), coef("c"), *eq.exponent);
  } else if (eq.form == "power-damping") {
    ode = OdeSpec::power_damping(coef("a"), coef("c"), *eq.exponent);
  } else if (eq.form == "generalized-kinetic") {
    ode = OdeSpec::generalized_kinetic(coef("f"), coef("R"));
  } else if (eq.form == "radical-equal") {
    ode = OdeSpec::radical_equal(coef("a"), coef("b"), *eq.exponent);
  } else {
    ode = OdeSpec::affine(coef("a"), coef("b"));
  }
  rhs = ode.rhs;
}

Expr Problem::parse(const std::string& text, bool one_variable) const {
  Expr e = one_variable ? parse_in_spec(spec, text, {"xi"}) : parse_in_spec(spec, text);
  if (!spec.parameters.empty()) e = substitute_parameters(e, spec.parameters);
  return e;
}

std::vector<Classification> classify(const Problem& problem,
                                     const std::optional<BuilderSpec>& hint) {
  std::vector<Classification> out;
  for (const std::string& family : all_families()) {
    Classification c;
    c.family = family;
    const BuilderSpec* b = hint && hint->family == family ? &*hint : nullptr;
    try {
      const Plan plan = plan_for(problem, family, b);
      c.applicable = true;
      c.residual = plan.residual;
      c.detail = plan.detail;
    } catch (const Error& e) {
      c.applicable = false;
      c.detail = e.what();
      const auto* rejected = dynamic_cast<const Rejected*>(&e);
      c.residual = rejected ? rejected->residual() : std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(c));
  }
  return out;
}

BuiltLagrangian build_lagrangian(const Problem& problem, const BuilderSpec& b,
                                 const std::string& name) {
  const Plan plan = plan_for(problem, b.family, &b);
  BuiltLagrangian out = plan.run(options_from(problem, b));
  out.name = name;
  return out;
}

BuiltLagrangian explicit_lagrangian(const Problem& problem, const LagrangianEntry& entry) {
  BuiltLagrangian out;
  out.name = entry.name;
  out.lagrangian = Lagrangian(problem.parse(*entry.expr), Family::kCustom, problem.box);
  return out;
}

}  // namespace lagrangeforge::cli
