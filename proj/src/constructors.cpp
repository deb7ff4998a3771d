#include "lagrangeforge/constructors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "auxiliary.hpp"
#include "lagrangeforge/dynamics.hpp"
#include "lagrangeforge/error.hpp"

namespace lagrangeforge {

namespace {

constexpr std::uint8_t kX = variable_bit(Variable::kX);
constexpr std::uint8_t kV = variable_bit(Variable::kV);
constexpr std::uint8_t kT = variable_bit(Variable::kT);

const Expr& X() {
  static const Expr e = var(Variable::kX);
  return e;
}
const Expr& V() {
  static const Expr e = var(Variable::kV);
  return e;
}

std::string fmt(double value) {
  std::ostringstream out;
  out.precision(6);
  out << value;
  return out.str();
}

Expr prepared(const Expr& e, const BuilderOptions& opts) {
  if (!e.node()) return constant(0.0);
  return bind_parameters(e, opts);
}

void require_only(const Expr& e, std::uint8_t allowed, std::string_view name,
                  std::string_view what) {
  if ((e.dependencies() & ~allowed) != 0) {
    throw Error(ErrorCode::kInadmissible,
                "coefficient " + std::string(name) + " must be a function of " +
                    std::string(what) + " only, got " + format(e));
  }
}

void require_exponent(double value, std::initializer_list<double> forbidden,
                      std::string_view name) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kBadExponent, "exponent " + std::string(name) + " must be finite");
  }
  for (double f : forbidden) {
    if (value == f) {
      throw Error(ErrorCode::kBadExponent,
                  "exponent " + std::string(name) + " = " + fmt(value) +
                      " is not allowed (the Lagrangian would be degenerate or undefined)");
    }
  }
}

bool is_integer(double value) { return std::isfinite(value) && value == std::round(value); }

double eval_at(const Expr& e, double x, double v, double t) {
  return eval(e, Binding(x, v, t));
}

std::vector<double> linspace(const Interval& iv, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        i == n - 1 ? iv.hi : iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / (n - 1);
  }
  return out;
}

Expr integral_x(const Expr& h, const BuilderOptions& opts) {
  return antideriv(h, Variable::kX, opts.x0);
}
Expr integral_t(const Expr& h, const BuilderOptions& opts) {
  return antideriv(h, Variable::kT, opts.t0);
}

Lagrangian make_lagrangian(Expr expr, Family family, const BuilderOptions& opts) {
  Lagrangian L(std::move(expr), family, opts.domain, opts.params);
  L.gauge.emplace_back("x0", opts.x0);
  L.gauge.emplace_back("t0", opts.t0);
  return L;
}

void post_verify(const Lagrangian& L, const OdeSpec& ode, double tol) {
  const VerificationReport r = el_residual_field(L, ode, L.domain, tol);
  if (!r.pass) {
    throw Error(ErrorCode::kVerificationFailed,
                "post-construction verification failed: max relative residual " +
                    fmt(r.max_rel_residual) + " > " + fmt(tol) + " at " +
                    describe_point(r.argmax));
  }
}

// Sign scan of a function of one coordinate; returns the first sign change.
struct SignScan {
  bool crosses = false;
  bool identically_zero = true;
  double location = 0.0;
  double max_abs = 0.0;
};

SignScan scan_sign(const Expr& e, Variable var, const Interval& iv, int n = 201) {
  SignScan out;
  double prev = 0.0;
  double prev_u = 0.0;
  bool have_prev = false;
  for (double u : linspace(iv, n)) {
    Point p;
    p[var] = u;
    const double value = eval(e, Binding(p));
    out.max_abs = std::fmax(out.max_abs, std::fabs(value));
    if (value != 0.0) out.identically_zero = false;
    if (have_prev && !out.crosses &&
        ((prev < 0.0 && value >= 0.0) || (prev > 0.0 && value <= 0.0) ||
         (prev == 0.0 && value != 0.0))) {
      out.crosses = true;
      out.location = prev == value ? u : prev_u + (u - prev_u) * prev / (prev - value);
      if (value == 0.0) out.location = u;
      if (prev == 0.0) out.location = prev_u;
    }
    prev = value;
    prev_u = u;
    have_prev = true;
  }
  return out;
}

double bisect_root(const Expr& e, Variable var, double lo, double hi) {
  const auto f = [&](double u) {
    Point p;
    p[var] = u;
    return eval(e, Binding(p));
  };
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Normalized distance of the denominator den = n1*u1 + n2*u2 from zero.
Expr normalized(const Expr& den, const Expr& s1, const Expr& s2) {
  return den / sqrt(s1 * s1 + s2 * s2);
}

void exclude_v_strata(DomainBox& box, double power, std::string_view label) {
  if (!is_integer(power)) {
    box.add_exclusion(V(), Exclusion::Kind::kPositive,
                      std::string(label) + ": non-integer power of v requires v > 0");
  } else if (power != 2.0 && power != 1.0 && power != 0.0) {
    box.add_exclusion(V(), Exclusion::Kind::kAwayFromZero,
                      std::string(label) + ": L_vv vanishes or diverges at v = 0");
  }
}

}  // namespace

Expr bind_parameters(const Expr& e, const BuilderOptions& opts) {
  if (!e.node()) return constant(0.0);
  if (opts.params.empty() || !e.has_parameters()) return e;
  return substitute_parameters(e, opts.params);
}

// ------------------------------------------------------------- forward rhs

Expr RhsCoefficients::assemble() const {
  const Expr& v = V();
  Expr num = p * pow(v, 2.0 * nu) + q * pow(v, 2.0 * nu - 1.0) + r * pow(v, nu) +
             s * pow(v, nu - 1.0) + w;
  Expr den = radical ? g * pow(v, 2.0 * nu - 2.0) + h * pow(v, nu - 2.0)
                     : g * pow(v, nu - 2.0) - h * pow(v, 2.0 * nu - 2.0);
  return num / den;
}

RhsCoefficients reciprocal_forward_rhs(const Expr& F, const Expr& G, double nu) {
  const Expr Fx = differentiate(F, Variable::kX);
  const Expr Ft = differentiate(F, Variable::kT);
  const Expr Gx = differentiate(G, Variable::kX);
  const Expr Gt = differentiate(G, Variable::kT);
  RhsCoefficients c;
  c.nu = nu;
  c.mu = -1.0;
  c.radical = false;
  c.p = (1.0 + nu) * F * Fx;
  c.q = nu * F * Ft;
  c.r = (1.0 + 2.0 * nu) * F * Gx + (1.0 - nu) * Fx * G;
  c.s = 2.0 * nu * Gt * F - nu * G * Ft;
  c.w = G * Gx;
  c.g = nu * (nu - 1.0) * F * G;
  c.h = nu * (nu + 1.0) * F * F;
  return c;
}

RhsCoefficients radical_forward_rhs(const Expr& A, const Expr& B, double mu, double nu) {
  require_exponent(mu, {1.0, 0.0}, "mu");
  require_exponent(nu, {0.0}, "nu");
  const Expr Ax = differentiate(A, Variable::kX);
  const Expr At = differentiate(A, Variable::kT);
  const Expr Bx = differentiate(B, Variable::kX);
  const Expr Bt = differentiate(B, Variable::kT);
  const double k = 1.0 - mu;
  RhsCoefficients c;
  c.mu = mu;
  c.nu = nu;
  c.radical = true;
  c.g = ((nu - mu) / k) * A;
  c.h = (mu * (nu - 1.0) / k) * B;
  // The A_x terms of p and r carry the coefficients obtained by direct
  // expansion of the Euler-Lagrange equation.
  c.p = (-(nu - mu) / (nu * k)) * Ax;
  c.q = (-1.0 / k) * At;
  c.r = (-(nu - nu * mu - mu) / (nu * k)) * Bx - (mu * (nu - 1.0) / (nu * k)) * Ax * B / A;
  c.s = neg(Bt) - (mu / k) * At * B / A;
  c.w = (mu / (nu * k)) * Bx * B / A;
  return c;
}

// ------------------------------------------------------------- standard

AdmissibilityReport admissible_standard(const Expr& a_in, const Expr& b_in, const Expr& c_in,
                                        const BuilderOptions& opts) {
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  const Expr c = prepared(c_in, opts);
  AdmissibilityReport report;
  for (const auto& [e, name] : {std::pair{a, "a"}, std::pair{b, "b"}, std::pair{c, "c"}}) {
    if (e.depends_on(Variable::kV)) {
      report.residual = std::numeric_limits<double>::infinity();
      report.reason = std::string("coefficient ") + name + " depends on v";
      return report;
    }
  }
  const Expr condition = differentiate(b, Variable::kX) - 2.0 * differentiate(a, Variable::kT);
  report.residual = 0.0;
  for (double x : linspace(opts.domain.x, 21)) {
    for (double t : linspace(opts.domain.t, 21)) {
      const double r = std::fabs(eval_at(condition, x, 0.0, t));
      if (r > report.residual || !std::isfinite(r)) {
        report.residual = std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
        report.argmax = {x, 0.0, t};
      }
    }
  }
  report.admissible = report.residual <= 1e-9;
  if (!report.admissible) {
    report.reason = "b_x - 2 a_t = " + fmt(report.residual) + " at " + describe_point(report.argmax);
  }
  return report;
}

namespace {

// Linear case: a = 0, b = b(t), c = x * c1(t) and Q = 0 gives the closed form
// 1/2 P (v^2 - c1 x^2).
bool linear_closed_form(const Expr& a, const Expr& b, const Expr& c, const Expr& q,
                        const BuilderOptions& opts, Expr* c1) {
  if (!a.is_constant(0.0) || !q.is_constant(0.0) || opts.x0 != 0.0) return false;
  if (b.depends_on(Variable::kX) || c.antideriv_depth() > 0) return false;
  const Expr slope = differentiate(c, Variable::kX);
  if (slope.depends_on(Variable::kX)) return false;
  if (!substitute(c, Variable::kX, constant(0.0)).is_constant(0.0)) return false;
  *c1 = slope;
  return true;
}

Expr time_gauge(const Expr& b, const BuilderOptions& opts, double factor) {
  Expr b_at_base = substitute(b, Variable::kX, constant(opts.x0));
  return factor * integral_t(b_at_base, opts);
}

}  // namespace

StandardCoeffs standard_coefficients(const Expr& a_in, const Expr& b_in, const Expr& c_in,
                                     const BuilderOptions& opts) {
  const AdmissibilityReport adm = admissible_standard(a_in, b_in, c_in, opts);
  if (!adm.admissible) {
    throw Error(ErrorCode::kInadmissible,
                "standard family inadmissible (residual " + fmt(adm.residual) + "): " + adm.reason);
  }
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  const Expr c = prepared(c_in, opts);
  const Expr q = prepared(opts.q, opts);
  require_only(q, kX | kT, "Q", "x and t");
  StandardCoeffs sc;
  sc.P = exp(2.0 * integral_x(a, opts) + time_gauge(b, opts, 1.0));
  sc.Q = q;
  sc.R = integral_x(differentiate(q, Variable::kT) - c * sc.P, opts);
  return sc;
}

Lagrangian build_standard(const Expr& a_in, const Expr& b_in, const Expr& c_in,
                          const BuilderOptions& opts) {
  const StandardCoeffs sc = standard_coefficients(a_in, b_in, c_in, opts);
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  const Expr c = prepared(c_in, opts);
  Expr c1;
  Expr expr;
  if (linear_closed_form(a, b, c, sc.Q, opts, &c1)) {
    expr = 0.5 * sc.P * (pow(V(), 2.0) - c1 * pow(X(), 2.0));
  } else {
    expr = 0.5 * sc.P * pow(V(), 2.0) + sc.Q * V() + sc.R;
  }
  Lagrangian L = make_lagrangian(expr, Family::kStandard, opts);
  if (!substitute(b, Variable::kX, constant(opts.x0)).is_constant(0.0)) {
    L.notes.emplace_back("t-gauge factor exp(int b(x0,t) dt) included in P");
  }
  return L;
}

Expr standard_hamiltonian(const StandardCoeffs& sc) {
  const Expr p = var("p");
  return pow(p - sc.Q, 2.0) / (2.0 * sc.P) - sc.R;
}

// ------------------------------------------------------------- reciprocal

Expr c_from_ab(const Expr& a_in, const Expr& b_in, const BuilderOptions& opts) {
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  require_only(a, kX, "a", "x");
  require_only(b, kX, "b", "x");
  const Expr A = integral_x(a, opts);
  return (2.0 / 9.0) * b * exp(neg(A)) * (integral_x(b * exp(A), opts) + opts.lambda);
}

Expr a_from_bc(const Expr& b_in, const Expr& c_in, Interval x_range, const BuilderOptions& opts) {
  const Expr b = prepared(b_in, opts);
  const Expr c = prepared(c_in, opts);
  require_only(b, kX, "b", "x");
  require_only(c, kX, "c", "x");
  for (const auto& [e, name] : {std::pair{b, "b"}, std::pair{c, "c"}}) {
    const SignScan scan = scan_sign(e, Variable::kX, x_range);
    if (scan.identically_zero || scan.crosses) {
      throw Error(ErrorCode::kZeroCrossing,
                  std::string("coefficient ") + name + " vanishes on the x-interval" +
                      (scan.crosses ? " near x=" + fmt(scan.location) : std::string()));
    }
  }
  return differentiate(b, Variable::kX) / b - differentiate(c, Variable::kX) / c +
         (2.0 / 9.0) * pow(b, 2.0) / c;
}

AdmissibilityReport reciprocal_constraint(const Expr& a_in, const Expr& b_in, const Expr& c_in,
                                          Interval x_range, const BuilderOptions& opts) {
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  const Expr c = prepared(c_in, opts);
  const Expr cx = differentiate(c, Variable::kX);
  const Expr bx = differentiate(b, Variable::kX);
  AdmissibilityReport report;
  for (double x : linspace(x_range, 201)) {
    const Binding at(x, 0.0, 0.0);
    const double bv = eval(b, at);
    if (std::fabs(bv) < 1e-10) continue;
    const double r = std::fabs(eval(cx, at) + (eval(a, at) - eval(bx, at) / bv) * eval(c, at) -
                               (2.0 / 9.0) * bv * bv);
    if (r > report.residual || !std::isfinite(r)) {
      report.residual = std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
      report.argmax = {x, 0.0, 0.0};
    }
  }
  report.admissible = report.residual <= 1e-8;
  if (!report.admissible) {
    report.reason = "constraint residual " + fmt(report.residual) + " at x=" + fmt(report.argmax.x);
  }
  return report;
}

Lagrangian build_reciprocal_autonomous(const Expr& a_in, const Expr& b_in, const Expr& c_in,
                                       const BuilderOptions& opts) {
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  const Expr c = prepared(c_in, opts);
  require_only(a, kX, "a", "x");
  require_only(b, kX, "b", "x");
  require_only(c, kX, "c", "x");
  const AdmissibilityReport constraint = reciprocal_constraint(a, b, c, opts.domain.x, opts);
  if (!constraint.admissible) {
    throw Error(ErrorCode::kConstraintViolated,
                "reciprocal constraint violated: " + constraint.reason);
  }
  DomainBox domain = opts.domain;
  const SignScan scan = scan_sign(b, Variable::kX, opts.domain.x, 401);
  if (scan.identically_zero) {
    throw Error(ErrorCode::kZeroCrossing, "coefficient b vanishes identically");
  }
  // Zeros of b are admissible only where c vanishes as well (G = 3cF/b stays
  // finite); their neighbourhoods are excluded from the domain.
  {
    const auto xs = linspace(opts.domain.x, 401);
    double prev = eval_at(b, xs[0], 0.0, 0.0);
    double scale = 0.0;
    for (double x : xs) scale = std::fmax(scale, std::fabs(eval_at(c, x, 0.0, 0.0)));
    bool has_zero = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double value = eval_at(b, xs[i], 0.0, 0.0);
      double root = 0.0;
      bool found = false;
      if (value == 0.0) {
        root = xs[i];
        found = true;
      } else if (i > 0 && prev != 0.0 && (prev < 0.0) != (value < 0.0)) {
        root = bisect_root(b, Variable::kX, xs[i - 1], xs[i]);
        found = true;
      }
      if (found) {
        const double c_root = std::fabs(eval_at(c, root, 0.0, 0.0));
        if (c_root > 1e-8 * (1.0 + scale)) {
          throw Error(ErrorCode::kZeroCrossing,
                      "coefficient b vanishes at x=" + fmt(root) + " where c = " + fmt(c_root) +
                          " does not");
        }
        has_zero = true;
      }
      prev = value;
    }
    if (has_zero) {
      domain.add_exclusion(b, Exclusion::Kind::kAwayFromZero, "zero of b", 5e-2);
    }
  }
  const Expr F = exp(integral_x(a, opts));
  const Expr G = 3.0 * c * F / b;
  const Expr den = V() * F + G;
  BuilderOptions o = opts;
  o.domain = domain;
  Lagrangian L = make_lagrangian(1.0 / den, Family::kReciprocal, o);
  L.domain.add_exclusion(normalized(den, F, G), Exclusion::Kind::kAwayFromZero,
                         "reciprocal denominator F v + G = 0");
  return L;
}

Lagrangian build_reciprocal_linear(const Expr& b_in, const Expr& c_in,
                                   const BuilderOptions& opts) {
  const Expr b = prepared(b_in, opts);
  const Expr c = prepared(c_in, opts);
  require_only(b, kT, "b", "t");
  require_only(c, kT, "c", "t");
  Expr f;
  Expr g;
  Lagrangian L;
  if (opts.printed_variant) {
    if (b.dependencies() != 0) {
      throw Error(ErrorCode::kUnsupported,
                  "the printed reciprocal-linear quadrature is only available for constant b");
    }
    // f = exp(int^t int^z (2 b' - c)(tau) exp(int_z^tau b) dtau dz), g = 2 f b - f'.
    const Expr B = integral_t(b, opts);
    const Expr inner = integral_t((2.0 * differentiate(b, Variable::kT) - c) * exp(B), opts);
    const Expr phi = exp(neg(B)) * inner;
    f = exp(integral_t(phi, opts));
    g = 2.0 * f * b - f * phi;
    L = make_lagrangian(1.0 / (f * V() + g * X()), Family::kReciprocal, opts);
    L.notes.emplace_back("printed reciprocal-linear quadrature (uncorrected negative control)");
  } else {
    Interval range{std::fmin(opts.t0, opts.domain.t.lo), std::fmax(opts.t0, opts.domain.t.hi)};
    const AuxiliaryPair w = solve_auxiliary(b / 3.0,
                                            (2.0 / 3.0) * differentiate(b, Variable::kT) +
                                                (2.0 / 9.0) * pow(b, 2.0) - c,
                                            opts.t0, 1.0, 0.0, range);
    const Expr t = var(Variable::kT);
    const Expr W = call(w.value, t);
    const Expr Wd = call(w.derivative, t);
    f = pow(W, 3.0);
    g = (2.0 / 3.0) * b * pow(W, 3.0) - pow(W, 2.0) * Wd;
    L = make_lagrangian(1.0 / (f * V() + g * X()), Family::kReciprocal, opts);
    L.gauge.emplace_back("w(t0)", 1.0);
    L.gauge.emplace_back("w'(t0)", 0.0);
    L.notes.emplace_back(
        "reciprocal-linear corrected: b = (f' + 3g)/(2f), f = w^3 with "
        "w'' = (b/3) w' + (2b'/3 + 2b^2/9 - c) w, g = (2fb - f')/3");
  }
  L.domain.add_exclusion(normalized(f * V() + g * X(), f, g), Exclusion::Kind::kAwayFromZero,
                         "reciprocal denominator f v + g x = 0");
  if (!opts.printed_variant) {
    post_verify(L, OdeSpec::linear(b, c, opts.params), std::fmax(opts.tol, 1e-5));
  }
  return L;
}

Lagrangian build_reciprocal_nu2(const Expr& a_in, const Expr& b_in, const BuilderOptions& opts) {
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  require_only(a, kX, "a", "x");
  require_only(b, kT, "b", "t");
  const Expr Ia = integral_x(a, opts);
  const Expr Ib = integral_t(b, opts);
  Expr F;
  Expr G;
  if (opts.printed_variant) {
    G = exp(neg(Ib));
    F = exp(-3.0 * Ib - 2.0 * Ia);
  } else {
    G = exp(Ib);
    F = exp(2.0 * Ia + 3.0 * Ib);
  }
  const Expr kinetic = F * pow(V(), 2.0);
  Lagrangian L = make_lagrangian(1.0 / (kinetic + G), Family::kReciprocal, opts);
  L.domain.add_exclusion((3.0 * kinetic - G) / (3.0 * kinetic + G),
                         Exclusion::Kind::kAwayFromZero, "degenerate stratum 3 F v^2 = G", 5e-2);
  L.domain.add_exclusion(kinetic + G, Exclusion::Kind::kAwayFromZero,
                         "reciprocal denominator F v^2 + G = 0");
  if (opts.printed_variant) {
    L.notes.emplace_back("printed reciprocal nu=2 exponents (uncorrected negative control)");
  } else {
    L.notes.emplace_back("reciprocal nu=2 corrected: G = exp(+int b), F = exp(2 int a + 3 int b)");
    post_verify(L, OdeSpec::standard(a, b, constant(0.0), opts.params), opts.tol);
  }
  return L;
}

// ------------------------------------------------------------- modified kinetic

AdmissibilityReport admissible_monomial(const Expr& a_in, const Expr& b_in, double mu,
                                        const BuilderOptions& opts) {
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  const Expr condition =
      (mu - 1.0) * differentiate(b, Variable::kX) - mu * differentiate(a, Variable::kT);
  AdmissibilityReport report;
  for (double x : linspace(opts.domain.x, 21)) {
    for (double t : linspace(opts.domain.t, 21)) {
      const double r = std::fabs(eval_at(condition, x, 0.0, t));
      if (r > report.residual || !std::isfinite(r)) {
        report.residual = std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
        report.argmax = {x, 0.0, t};
      }
    }
  }
  report.admissible = report.residual <= 1e-9;
  if (!report.admissible) {
    report.reason = "(mu-1) b_x - mu a_t = " + fmt(report.residual) + " at " +
                    describe_point(report.argmax);
  }
  return report;
}

namespace {

Lagrangian monomial_core(const Expr& a, const Expr& b, const Expr& c, double mu,
                         const BuilderOptions& opts) {
  const Expr F = exp(mu * integral_x(a, opts) + time_gauge(b, opts, mu - 1.0));
  const Expr G = (mu * (mu - 1.0)) * integral_x(c * F, opts);
  Lagrangian L = make_lagrangian(F * pow(V(), mu) - G, Family::kMonomial, opts);
  exclude_v_strata(L.domain, mu, "monomial kinetic term");
  return L;
}

}  // namespace

Lagrangian build_monomial(const Expr& a_in, const Expr& b_in, const Expr& c_in, double mu,
                          const BuilderOptions& opts) {
  require_exponent(mu, {0.0, 1.0}, "mu");
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  const Expr c = prepared(c_in, opts);
  for (const auto& [e, name] : {std::pair{a, "a"}, std::pair{b, "b"}, std::pair{c, "c"}}) {
    require_only(e, kX | kT, name, "x and t");
  }
  const AdmissibilityReport adm = admissible_monomial(a, b, mu, opts);
  if (!adm.admissible) {
    throw Error(ErrorCode::kInadmissible, "monomial family inadmissible: " + adm.reason);
  }
  Lagrangian L = monomial_core(a, b, c, mu, opts);
  if (!substitute(b, Variable::kX, constant(opts.x0)).is_constant(0.0)) {
    L.notes.emplace_back("t-gauge factor exp((mu-1) int b(x0,t) dt) included in F");
  }
  return L;
}

Lagrangian build_power_damping(const Expr& a_in, const Expr& c_in, double nu,
                               const BuilderOptions& opts) {
  require_exponent(nu, {1.0, 2.0}, "nu");
  const Expr a = prepared(a_in, opts);
  const Expr c = prepared(c_in, opts);
  require_only(a, kX, "a", "x");
  require_only(c, kX, "c", "x");
  return monomial_core(a, constant(0.0), c, 2.0 - nu, opts);
}

namespace {

// Closed forms of Psi with Psi'' = 1/R for the catalogued kinetic functions.
std::optional<Expr> kinetic_closed_form(const Expr& r, DomainBox& domain) {
  const Expr& v = V();
  if (!r.depends_on(Variable::kV)) {
    if (r.is_constant(0.0)) return std::nullopt;
    return pow(v, 2.0) / (2.0 * r);
  }
  if (structurally_equal(r, v)) {
    domain.add_exclusion(v, Exclusion::Kind::kAwayFromZero, "v ln|v| kinetic term: v = 0");
    return v * ln(abs(v));
  }
  if (r.op() == Op::kPow && structurally_equal(r.child(0), v) && r.child(1).is_constant()) {
    const double nu = r.child(1).constant_value();
    if (nu == 2.0) {
      domain.add_exclusion(v, Exclusion::Kind::kAwayFromZero, "-ln|v| kinetic term: v = 0");
      return neg(ln(abs(v)));
    }
    if (nu != 1.0) {
      exclude_v_strata(domain, 2.0 - nu, "power kinetic term");
      if (is_integer(2.0 - nu) && nu != 0.0) {
        domain.add_exclusion(v, Exclusion::Kind::kAwayFromZero, "power kinetic term: v = 0");
      }
      return pow(v, 2.0 - nu) / ((2.0 - nu) * (1.0 - nu));
    }
  }
  // (1 - v^2/K)^(3/2) with K = c0^2 > 0, recognised numerically on the base so
  // that any simplified spelling (1 - v^2, 1 - 0.25*v^2, ...) matches.
  if (r.op() == Op::kPow && r.child(1).is_constant(1.5) && r.child(0).dependencies() == kV &&
      !r.child(0).has_parameters() && r.child(0).antideriv_depth() == 0) {
    const Expr& base = r.child(0);
    const auto at = [&](double u) { return eval(base, Binding(0.0, u, 0.0)); };
    try {
      const double inv_k = 1.0 - at(1.0);
      bool quadratic = at(0.0) == 1.0 && inv_k > 0.0;
      for (double u : {-1.0, 0.5, 2.0, -3.0}) {
        quadratic = quadratic && std::fabs(at(u) - (1.0 - inv_k * u * u)) <=
                                     1e-14 * (1.0 + inv_k * u * u);
      }
      if (quadratic) {
        domain.add_exclusion(base, Exclusion::Kind::kPositive,
                             "relativistic kinetic term: |v| < c0");
        return (-1.0 / inv_k) * sqrt(base);
      }
    } catch (const Error&) {
      // Not evaluable at the probe points: fall through to quadrature.
    }
  }
  return std::nullopt;
}

}  // namespace

Lagrangian build_generalized_kinetic(const Expr& f_in, const Expr& r_in,
                                     const BuilderOptions& opts) {
  const Expr f = prepared(f_in, opts);
  const Expr r = prepared(r_in, opts);
  require_only(f, kX | kT, "f", "x and t");
  require_only(r, kV, "R", "v");
  DomainBox domain = opts.domain;
  Expr psi;
  if (auto closed = kinetic_closed_form(r, domain)) {
    psi = *closed;
  } else {
    const SignScan scan = scan_sign(r, Variable::kV, opts.domain.v);
    if (scan.identically_zero || scan.crosses) {
      throw Error(ErrorCode::kDomain,
                  "kinetic integral diverges: R vanishes on the v-interval" +
                      (scan.crosses ? " near v=" + fmt(scan.location) : std::string()));
    }
    const double v0 = opts.domain.v.contains(0.0) ? 0.0 : opts.domain.v.lo;
    psi = antideriv(antideriv(1.0 / r, Variable::kV, v0), Variable::kV, v0);
  }
  BuilderOptions o = opts;
  o.domain = domain;
  return make_lagrangian(psi + integral_x(f, opts), Family::kGeneralizedKinetic, o);
}

// ------------------------------------------------------------- radical

Lagrangian build_radical_equal(const Expr& a_in, const Expr& b_in, double nu,
                               const BuilderOptions& opts) {
  require_exponent(nu, {0.0, 1.0}, "nu");
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  require_only(a, kT, "a", "t");
  require_only(b, kT, "b", "t");
  const Expr E = exp(-nu * integral_t(a, opts));
  const double sign = opts.printed_variant ? 1.0 : -1.0;
  const Expr S = (sign * nu) * integral_t(b * E, opts) + opts.s0;
  const SignScan scan = scan_sign(S, Variable::kT, opts.domain.t);
  if (scan.identically_zero) {
    throw Error(ErrorCode::kZeroCrossing, "S(t) vanishes identically; choose a nonzero gauge s0");
  }
  if (scan.crosses && scan.location > opts.domain.t.lo && scan.location < opts.domain.t.hi) {
    throw Error(ErrorCode::kZeroCrossing, "S(t) changes sign near t=" + fmt(scan.location));
  }
  const Expr A = pow(S, 1.0 - nu);
  const Expr B = pow(S, -nu) * E;
  const Expr base = A * pow(V(), nu) + B;
  Lagrangian L = make_lagrangian(pow(base, 1.0 / nu), Family::kRadical, opts);
  L.gauge.emplace_back("s0", opts.s0);
  L.domain.add_exclusion(S, Exclusion::Kind::kAwayFromZero, "zero of S(t)");
  exclude_v_strata(L.domain, nu, "radical kinetic term");
  L.domain.add_exclusion(base,
                         is_integer(1.0 / nu) ? Exclusion::Kind::kAwayFromZero
                                              : Exclusion::Kind::kPositive,
                         "radical base A v^nu + B");
  if (opts.printed_variant) {
    L.notes.emplace_back("printed radical S-quadrature sign (uncorrected negative control)");
  } else {
    L.notes.emplace_back("radical mu=nu corrected: S = -nu int b exp(-nu int a) + s0");
    post_verify(L, OdeSpec::radical_equal(a, b, nu, opts.params), opts.tol);
  }
  return L;
}

Lagrangian build_radical_linear(const Expr& a_in, const Expr& b_in, double mu,
                                const BuilderOptions& opts) {
  require_exponent(mu, {0.0, 1.0}, "mu");
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  require_only(a, kT, "a", "t");
  require_only(b, kT, "b", "t");
  const Expr Ia = integral_t(a, opts);
  const Expr A = exp((mu - 1.0) * Ia);
  const Expr B = (opts.b0 - integral_t(b * exp(neg(Ia)), opts)) * exp(mu * Ia);
  const Expr base = A * V() + B;
  Lagrangian L = make_lagrangian(pow(base, 1.0 / mu), Family::kRadical, opts);
  L.gauge.emplace_back("b0", opts.b0);
  L.domain.add_exclusion(base,
                         is_integer(1.0 / mu) ? Exclusion::Kind::kAwayFromZero
                                              : Exclusion::Kind::kPositive,
                         "radical base A v + B");
  return L;
}

// ------------------------------------------------------------- multi-Lagrangian

Lagrangian build_exponential_family(const Expr& a_in, const Expr& b_in, const Expr& f_in,
                                    const BuilderOptions& opts) {
  const Expr a = prepared(a_in, opts);
  const Expr b = prepared(b_in, opts);
  const Expr F = prepared(f_in, opts);
  require_only(a, kT, "a", "t");
  require_only(b, kT, "b", "t");
  if (F.dependencies() != 0) {
    throw Error(ErrorCode::kInadmissible, "F must be a function of xi only");
  }
  const Expr Ia = integral_t(a, opts);
  const Expr decay = exp(neg(Ia));
  const Expr arg = V() * decay - integral_t(b * decay, opts) + opts.c0;
  const Expr expr = exp(Ia) * substitute(F, kXi, arg);
  Lagrangian L = make_lagrangian(expr, Family::kExponential, opts);
  L.gauge.emplace_back("c0", opts.c0);
  L.domain.add_exclusion(expr, Exclusion::Kind::kDefined, "F undefined at its argument");

  // F'' must not vanish on the image of the argument.
  const Expr Fx = substitute(F, kXi, X());
  const Expr F2 = differentiate(differentiate(Fx, Variable::kX), Variable::kX);
  for (const Point& p : L.domain.sample_points(L.params)) {
    const double xi = eval(arg, L.binding(p));
    const double f2 = eval(F2, Binding(xi, 0.0, 0.0));
    if (!(std::fabs(f2) >= opts.eps_reg)) {
      throw Error(ErrorCode::kDegenerateLagrangian,
                  "F''(xi) = " + fmt(f2) + " vanishes at xi=" + fmt(xi) + " from " +
                      describe_point(p));
    }
  }
  return L;
}

Lagrangian compose_invariant(const Lagrangian& L, const OdeSpec& ode, const Expr& f_in,
                             const BuilderOptions& opts) {
  const Expr F = prepared(f_in, opts);
  if (F.dependencies() != 0) {
    throw Error(ErrorCode::kInadmissible, "F must be a function of xi only");
  }
  if (F.op() == Op::kVar && F.name() == kXi) return L;

  ParameterMap params = ode.params;
  for (const auto& [k, value] : L.params) params[k] = value;
  for (const auto& [k, value] : opts.params) params[k] = value;

  // Probe trajectory from the sample point closest to the centre of the domain.
  const std::vector<Point> pts = L.domain.sample_points(params);
  const Point centre{L.domain.x.mid(), L.domain.v.mid(), L.domain.t.lo};
  Point start = pts.front();
  double best = std::numeric_limits<double>::infinity();
  for (const Point& p : pts) {
    const double d = std::hypot(p.x - centre.x, p.v - centre.v, p.t - centre.t);
    if (d < best) {
      best = d;
      start = p;
    }
  }
  const double t1 = L.domain.t.hi > start.t ? L.domain.t.hi : start.t + 1.0;
  OdeSpec probe_ode = ode;
  probe_ode.params = params;
  const Trajectory traj = integrate_ode(probe_ode, start.x, start.v, start.t, t1);
  const InvarianceReport inv = is_invariant_of_motion(L, probe_ode, traj, 1e-5);
  if (!inv.pass) {
    throw Error(ErrorCode::kNotInvariant,
                "L is not an invariant of motion: max |dL/dt|/(1+|L|) = " + fmt(inv.max_rate) +
                    ", drift " + fmt(inv.max_drift));
  }
  Lagrangian out = L;
  out.expr = substitute(F, kXi, L.expr);
  out.family = Family::kComposed;
  out.params = params;
  out.domain.add_exclusion(out.expr, Exclusion::Kind::kDefined, "F(L) undefined");
  out.notes.emplace_back("composition F(L) of an invariant of motion");
  post_verify(out, probe_ode, std::fmax(opts.tol, 1e-5));
  return out;
}

}  // namespace lagrangeforge
