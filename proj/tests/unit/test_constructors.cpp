#include <cmath>
#include <random>

#include "doctest.h"
#include "lagrangeforge/constructors.hpp"
#include "lagrangeforge/dynamics.hpp"
#include "support/common.hpp"
#include "support/random_cases.hpp"

using namespace lagrangeforge;
using lagrangeforge::testing::code_of;
using lagrangeforge::testing::px;
using lagrangeforge::testing::rel_err;

namespace {

const Expr kZero = constant(0.0);

DomainBox positive_v_box() { return DomainBox({-1.0, 1.0}, {0.2, 2.0}, {0.0, 2.0}); }

BuilderOptions with_box(DomainBox box, ParameterMap params = {}) {
  BuilderOptions o;
  o.domain = std::move(box);
  o.params = std::move(params);
  return o;
}

VerificationReport verify(const Lagrangian& l, const OdeSpec& ode, double tol = 1e-6) {
  return el_residual_field(l, ode, l.domain, tol);
}

double max_field_difference(const Lagrangian& l1, const Lagrangian& l2) {
  return equivalence_check(l1, l2, l1.domain, 1e-8).max_rel_difference;
}

}  // namespace

// ----------------------------------------------------------------- standard

TEST_CASE("standard admissibility") {
  const ParameterMap p{{"g", 0.1}, {"w", 1.0}};
  BuilderOptions o;
  o.params = p;
  CHECK(admissible_standard(kZero, px("g", {"g"}), px("w^2*x", {"w"}), o).admissible);
  const auto bad = admissible_standard(px("x*t"), kZero, kZero);
  CHECK_FALSE(bad.admissible);
  CHECK(bad.residual == doctest::Approx(2.0));  // |2x| at x = +-1
  CHECK(admissible_standard(px("sin(x)"), px("t^2 + 1"), px("x*t")).admissible);
  CHECK(code_of([] { build_standard(px("x*t"), kZero, kZero); }) == ErrorCode::kInadmissible);
}

TEST_CASE("standard builder examples") {
  BuilderOptions o;
  o.params = {{"g", 0.1}, {"w", 1.0}};
  const Lagrangian damped = build_standard(kZero, px("g", {"g"}), px("w^2*x", {"w"}), o);
  CHECK(format(damped.expr) == format(canonical(px("0.5*exp(0.1*t)*(v^2 - x^2)"))));
  CHECK(structurally_equal(damped.expr, canonical(px("0.5*exp(0.1*t)*(v^2 - 1*x^2)"))));
  const auto r = verify(damped, OdeSpec::standard(kZero, constant(0.1), px("x")), 1e-10);
  CHECK(r.pass);
  CHECK(r.max_rel_residual < 1e-10);
  CHECK(damped.family == Family::kStandard);

  CHECK(format(build_standard(kZero, kZero, kZero).expr) == format(px("0.5*v^2")));

  // Constant damping with an x-only force: (k, 0, c(x)).
  BuilderOptions ok;
  ok.params = {{"k", 0.4}};
  const Expr c = px("x + x^3");
  const Lagrangian l3 = build_standard(px("k", {"k"}), kZero, c, ok);
  const Point q{0.7, 0.3, 0.0};
  const double expected = 0.5 * std::exp(0.56) * 0.09 -
                          definite_integral(px("(x + x^3)*exp(0.8*x)"), Variable::kX, 0.0, 0.7);
  CHECK(rel_err(eval(l3.expr, Binding(q)), expected) <= 1e-10);
  CHECK(verify(l3, OdeSpec::standard(constant(0.4), kZero, c)).pass);
}

TEST_CASE("standard family general coefficients and gauges") {
  const Expr a = px("sin(x) + 0.2");
  const Expr b = px("0.3*t + 0.5");
  const Expr c = px("x*cos(t) + 0.1");
  const OdeSpec ode = OdeSpec::standard(a, b, c);
  BuilderOptions o;
  const Lagrangian l0 = build_standard(a, b, c, o);
  CHECK(verify(l0, ode).pass);
  o.x0 = 0.4;
  o.t0 = -0.3;
  o.q = px("x^2*t + sin(x)");
  const Lagrangian l1 = build_standard(a, b, c, o);
  CHECK(verify(l1, ode).pass);
  CHECK_FALSE(structurally_equal(l0.expr, l1.expr));
  CHECK(max_field_difference(l0, l1) <= 1e-8);
}

TEST_CASE("standard Hamiltonian") {
  StandardCoeffs sc{px("exp(0.2*t)"), kZero, px("-0.5*x^2*exp(0.2*t)")};
  const Expr h = standard_hamiltonian(sc);
  const Lagrangian l(0.5 * sc.P * pow(var(Variable::kV), 2.0) + sc.R);
  for (double p : {-1.3, 0.2, 2.0}) {
    for (double t : {0.0, 0.7}) {
      const double x = 0.6;
      const double closed = eval(h, Binding(x, 0.0, t).with("p", p));
      const double numeric = hamiltonian_value(l, x, p, t, {-20.0, 20.0});
      CHECK(std::fabs(closed - numeric) <= 1e-10 * (1.0 + std::fabs(closed)));
      const double expected = p * p * std::exp(-0.2 * t) / 2 + 0.5 * x * x * std::exp(0.2 * t);
      CHECK(closed == doctest::Approx(expected).epsilon(1e-13));
    }
  }
  StandardCoeffs free{constant(1.0), kZero, kZero};
  CHECK(format(standard_hamiltonian(free)) == format(px("p^2/2", {"p"})));
}

// ----------------------------------------------------------------- reciprocal

TEST_CASE("c from (a, b)") {
  BuilderOptions o;
  o.params = {{"k", 1.7}};
  o.lambda = 0.6;
  const Expr c = c_from_ab(kZero, px("k*x", {"k"}), o);
  const double lambda1 = 2.0 / 9.0 * 1.7 * 0.6;
  for (int i = 0; i <= 20; ++i) {
    const double x = -1.0 + 0.1 * i;
    const double expected = 1.7 * 1.7 * x * x * x / 9.0 + lambda1 * x;
    CHECK(std::fabs(eval(c, Binding(x, 0, 0)) - expected) <= 1e-12 * (1.0 + std::fabs(expected)));
  }
  CHECK(eval(c_from_ab(kZero, kZero), Binding(0.3, 0, 0)) == 0.0);

  const double alpha = 0.8, beta = 1.3;
  const Expr cc = c_from_ab(constant(alpha), constant(beta));
  for (double x : {-0.9, 0.1, 0.8}) {
    const double expected = 2 * beta * beta / (9 * alpha) * (1 - std::exp(-alpha * x));
    CHECK(rel_err(eval(cc, Binding(x, 0, 0)), expected) <= 1e-12);
  }
  const auto constraint = reciprocal_constraint(constant(alpha), constant(beta), cc, {-1, 1});
  CHECK(constraint.residual <= 1e-9);
  CHECK(code_of([] { c_from_ab(px("t"), kZero); }) == ErrorCode::kInadmissible);
}

TEST_CASE("a from (b, c)") {
  const Expr a = a_from_bc(px("2*x"), px("4*x^3/9"), {0.2, 1.0});
  for (double x : {0.2, 0.5, 0.9}) CHECK(std::fabs(eval(a, Binding(x, 0, 0))) <= 1e-12);
  // Round trip through c_from_ab with a nonzero gauge keeps c away from zero.
  const Expr a0 = px("0.3*x + 0.1");
  const Expr b = px("1 + x^2");
  BuilderOptions o;
  o.lambda = 2.0;
  const Expr c = c_from_ab(a0, b, o);
  const Expr back = a_from_bc(b, c, {-1, 1});
  for (double x : {-0.8, -0.1, 0.4, 1.0}) {
    CHECK(rel_err(eval(back, Binding(x, 0, 0)), eval(a0, Binding(x, 0, 0))) <= 1e-8);
  }
  CHECK(code_of([] { a_from_bc(px("x + 2"), kZero, {-1, 1}); }) == ErrorCode::kZeroCrossing);
  CHECK(code_of([] { a_from_bc(px("x"), px("1 + x^2"), {-1, 1}); }) == ErrorCode::kZeroCrossing);
}

TEST_CASE("reciprocal autonomous builder") {
  // Lienard: b = k x vanishes at x = 0 together with c.
  BuilderOptions o = with_box(DomainBox({-1, 1}, {-1, 1}, {0, 1}), {{"k", 1.0}});
  o.lambda = 1.5;
  const Expr b = px("k*x", {"k"});
  const Expr c = c_from_ab(kZero, b, o);
  const Lagrangian l = build_reciprocal_autonomous(kZero, b, c, o);
  CHECK(l.family == Family::kReciprocal);
  CHECK(verify(l, OdeSpec::standard(kZero, bind_parameters(b, o), c)).pass);
  const double x = 0.4;
  const double expected_g = 3.0 * eval(c, Binding(x, 0, 0)) / x;
  CHECK(rel_err(eval(l.expr, Binding(x, 0.3, 0)), 1.0 / (0.3 + expected_g)) <= 1e-12);

  const Expr b2 = px("exp(x) + 1");
  const Expr c2 = c_from_ab(kZero, b2);
  CHECK(verify(build_reciprocal_autonomous(kZero, b2, c2), OdeSpec::standard(kZero, b2, c2)).pass);

  CHECK(code_of([&] { build_reciprocal_autonomous(kZero, b2, c2 + 1.0); }) ==
        ErrorCode::kConstraintViolated);
  // b identically zero satisfies the constraint with c_x = 0 but G = 3cF/b is undefined.
  CHECK(code_of([&] { build_reciprocal_autonomous(kZero, kZero, constant(1.0)); }) ==
        ErrorCode::kZeroCrossing);
  // b = x - 0.5 vanishes inside the interval; c from the quadrature vanishes there too,
  // so the neighbourhood is excluded instead.
  const Expr b3 = px("x - 0.5");
  BuilderOptions o3;
  o3.lambda = 1.0;
  const Expr c3 = c_from_ab(kZero, b3, o3);
  const Lagrangian l3 = build_reciprocal_autonomous(kZero, b3, c3, o3);
  CHECK(verify(l3, OdeSpec::standard(kZero, b3, c3)).pass);
  for (const Point& q : l3.domain.sample_points()) CHECK(std::fabs(q.x - 0.5) >= 0.05);
}

TEST_CASE("reciprocal linear builder") {
  const ParameterMap g{{"g", 0.4}};
  BuilderOptions o = with_box(DomainBox({-1, 1}, {-1, 1}, {0, 1}), g);
  const Expr b = px("g", {"g"});
  const Lagrangian l = build_reciprocal_linear(b, kZero, o);
  // w = e^{2gt/3}/3 + 2e^{-gt/3}/3 solves the auxiliary equation with w(0) = 1,
  // w'(0) = 0; the pure mode w = e^{2gt/3} would give f = e^{2gt} and g = 0.
  for (double t : {0.0, 0.5, 1.0}) {
    const double v = 0.7, x = 0.3, gm = 0.4;
    const double w = std::exp(2 * gm * t / 3) / 3 + 2 * std::exp(-gm * t / 3) / 3;
    const double wd = 2 * gm / 9 * (std::exp(2 * gm * t / 3) - std::exp(-gm * t / 3));
    const double f = w * w * w, fd = 3 * w * w * wd;
    const double gg = (2 * f * gm - fd) / 3;
    CHECK(rel_err(eval(l.expr, Binding(x, v, t)), 1.0 / (f * v + gg * x)) <= 1e-9);
  }
  CHECK(verify(l, OdeSpec::linear(constant(0.4), kZero), 1e-5).pass);

  BuilderOptions airy = with_box(DomainBox({-1, 1}, {-1, 1}, {0.1, 2.0}));
  const Lagrangian la = build_reciprocal_linear(kZero, px("-t"), airy);
  CHECK(verify(la, OdeSpec::linear(kZero, px("-t")), 1e-5).pass);

  BuilderOptions ho = with_box(DomainBox({-1, 1}, {-1, 1}, {0, 1}));
  const Lagrangian lh = build_reciprocal_linear(kZero, constant(1.0), ho);
  CHECK(verify(lh, OdeSpec::linear(kZero, constant(1.0)), 1e-5).pass);

  // The auxiliary solution w reaches zero (w'' = -4 w from w = 1, w' = 0 at t = pi/4).
  BuilderOptions longer = with_box(DomainBox({-1, 1}, {-1, 1}, {0, 1.0}));
  CHECK(code_of([&] { build_reciprocal_linear(kZero, constant(4.0), longer); }) ==
        ErrorCode::kZeroCrossing);

  BuilderOptions printed = airy;
  printed.printed_variant = true;
  CHECK(code_of([&] { build_reciprocal_linear(px("t"), px("-t"), printed); }) ==
        ErrorCode::kUnsupported);
  const Lagrangian lp = build_reciprocal_linear(kZero, px("-t"), printed);
  const auto rp = verify(lp, OdeSpec::linear(kZero, px("-t")), 1e-5);
  CHECK_FALSE(rp.pass);
  CHECK(rp.max_rel_residual > 1e-2);
}

TEST_CASE("reciprocal nu = 2 builder") {
  BuilderOptions o = with_box(DomainBox({-1, 1}, {-1, 1}, {0, 1}));
  const Lagrangian l = build_reciprocal_nu2(kZero, constant(1.0), o);
  const Point p{0.2, 0.5, 0.6};
  CHECK(rel_err(eval(l.expr, Binding(p)), 1.0 / (std::exp(1.8) * 0.25 + std::exp(0.6))) <= 1e-12);
  const auto r = verify(l, OdeSpec::standard(kZero, constant(1.0), kZero), 1e-8);
  CHECK(r.pass);

  const Lagrangian lk = build_reciprocal_nu2(constant(0.7), kZero, o);
  CHECK(verify(lk, OdeSpec::standard(constant(0.7), kZero, kZero)).pass);
  CHECK(rel_err(eval(lk.expr, Binding(p)), 1.0 / (std::exp(0.28) * 0.25 + 1.0)) <= 1e-12);

  CHECK(format(build_reciprocal_nu2(kZero, kZero, o).expr) == format(px("1/(v^2 + 1)")));

  BuilderOptions printed = o;
  printed.printed_variant = true;
  const Lagrangian lp = build_reciprocal_nu2(kZero, constant(1.0), printed);
  const auto rp = verify(lp, OdeSpec::standard(kZero, constant(1.0), kZero), 1e-8);
  CHECK_FALSE(rp.pass);
  CHECK(rp.max_rel_residual > 0.1);
}

TEST_CASE("reciprocal forward reductions match implied accelerations") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Expr F = px("exp(0.3*x + 0.2*t) + 0.5");
  const Expr G = px("1 + x^2 + 0.3*sin(t)");
  for (double nu : {1.0, 2.0, 3.0, 0.5, -1.5}) {
    const Expr rhs = reciprocal_forward_rhs(F, G, nu).assemble();
    const Expr L = 1.0 / (F * pow(var(Variable::kV), nu) + G);
    int checked = 0;
    while (checked < 200) {
      const Point p{u(rng), 0.3 + 1.2 * (0.5 + 0.5 * u(rng)), u(rng)};
      const Binding b(p);
      const double lvv = eval_jet2(L, b).hess[3];
      if (std::fabs(lvv) < 1e-3) continue;
      const double expected = implied_acceleration(L, b);
      CHECK(std::fabs(eval(rhs, b) - expected) <= 1e-8 * (1.0 + std::fabs(expected)));
      ++checked;
    }
  }
  // nu = 1 with F, G of x only reproduces the closed-form reduction.
  const Expr f1 = px("exp(x)"), g1 = px("2 + x^2");
  const Expr r1 = reciprocal_forward_rhs(f1, g1, 1.0).assemble();
  const Point q{0.3, 0.8, 0.0};
  const double F0 = std::exp(0.3), Fp = F0, G0 = 2.09, Gp = 0.6;
  const double expected = -(Fp / F0) * 0.64 - 1.5 * Gp / F0 * 0.8 - G0 * Gp / (2 * F0 * F0);
  CHECK(rel_err(eval(r1, Binding(q)), expected) <= 1e-12);
  // nu = 2 with G = G(t), F = f(x) G^3.
  const Expr r2 = reciprocal_forward_rhs(px("exp(x)*exp(3*t)"), px("exp(t)"), 2.0).assemble();
  CHECK(rel_err(eval(r2, Binding(q)), -0.5 * 0.64 - 0.8) <= 1e-12);
  CHECK(eval(reciprocal_forward_rhs(constant(1.0), kZero, 1.0).assemble(), Binding(q)) == 0.0);
}

// ----------------------------------------------------------------- modified kinetic

TEST_CASE("monomial builder") {
  const ParameterMap k{{"k", 1.0}};
  BuilderOptions o = with_box(positive_v_box(), k);
  for (double n : {-1.0, 2.0, 3.0, 5.0, 2.5}) {
    const Lagrangian l = build_monomial(px("k", {"k"}), kZero, kZero, n, o);
    const Point p{0.3, 0.7, 0.0};
    CHECK(rel_err(eval(l.expr, l.binding(p)), std::pow(0.7, n) * std::exp(n * 0.3)) <= 1e-12);
    CHECK(verify(l, OdeSpec::standard(constant(1.0), kZero, kZero)).pass);
  }
  for (double n : {0.0, 1.0}) {
    try {
      build_monomial(px("k", {"k"}), kZero, kZero, n, o);
      FAIL("should throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBadExponent);
      CHECK(std::string(e.what()).find("degenerate") != std::string::npos);
    }
  }
  const Lagrangian l3 = build_monomial(kZero, constant(0.5), kZero, 2.5, o);
  const Point p{0.0, 0.9, 1.2};
  CHECK(rel_err(eval(l3.expr, Binding(p)), std::pow(0.9, 2.5) * std::exp(1.5 * 0.5 * 1.2)) <= 1e-12);
  CHECK(format(build_monomial(kZero, kZero, kZero, 2.0, o).expr) == format(px("v^2")));
  CHECK(code_of([&] { build_monomial(px("x*t"), kZero, kZero, 2.0, o); }) ==
        ErrorCode::kInadmissible);

  // Non-integer exponent restricts the domain to v > 0.
  const Lagrangian frac = build_monomial(kZero, kZero, kZero, 2.5, with_box(DomainBox{}));
  for (const Point& q : frac.domain.sample_points()) CHECK(q.v > 0.0);

  // Nontrivial c(x, t): x'' + a v^2 + b v + c v^(2-mu) = 0.
  const Expr a = px("0.3*x"), b = px("0.2"), c = px("x*t + 1");
  const Lagrangian lg = build_monomial(a, b, c, 3.0, with_box(positive_v_box()));
  CHECK(verify(lg, OdeSpec::monomial(a, b, c, 3.0)).pass);
}

TEST_CASE("power damping builder") {
  const ParameterMap k{{"k", 0.6}};
  BuilderOptions o = with_box(positive_v_box(), k);
  const Lagrangian l = build_power_damping(px("k", {"k"}), kZero, 3.0, o);
  const Point p{0.5, 1.5, 0.0};
  CHECK(rel_err(eval(l.expr, l.binding(p)), std::exp(-0.3) / 1.5) <= 1e-12);
  CHECK(verify(l, OdeSpec::power_damping(constant(0.6), kZero, 3.0)).pass);
  const Lagrangian l0 = build_power_damping(kZero, constant(0.8), 1.5, o);
  CHECK(verify(l0, OdeSpec::power_damping(kZero, constant(0.8), 1.5)).pass);
  const Lagrangian lf = build_power_damping(kZero, kZero, 0.5, o);
  CHECK(verify(lf, OdeSpec::from_rhs(kZero)).pass);
  CHECK(code_of([&] { build_power_damping(kZero, kZero, 1.0, o); }) == ErrorCode::kBadExponent);
  CHECK(code_of([&] { build_power_damping(kZero, kZero, 2.0, o); }) == ErrorCode::kBadExponent);
}

TEST_CASE("generalized kinetic builder") {
  BuilderOptions o = with_box(positive_v_box());
  const Expr f = px("sin(x) + t");
  const Lagrangian l1 = build_generalized_kinetic(f, px("v"), o);
  CHECK(rel_err(eval(l1.expr, Binding(0.4, 0.5, 0.3)),
                0.5 * std::log(0.5) + (1 - std::cos(0.4)) + 0.3 * 0.4) <= 1e-12);
  CHECK(verify(l1, OdeSpec::generalized_kinetic(f, px("v"))).pass);

  BuilderOptions rel_opts = with_box(DomainBox({-1, 1}, {-0.9, 0.9}, {0, 1}), {{"c0", 1.0}});
  const Expr r = px("(1 - v^2/c0^2)^(3/2)", {"c0"});
  const Lagrangian l4 = build_generalized_kinetic(px("-x"), r, rel_opts);
  CHECK(rel_err(eval(l4.expr, Binding(0.2, 0.6, 0)), -0.8 - 0.02) <= 1e-12);
  CHECK(verify(l4, OdeSpec::generalized_kinetic(px("-x"), bind_parameters(r, rel_opts))).pass);

  const Lagrangian grav = build_generalized_kinetic(px("-g0", {"g0"}), constant(1.0),
                                                    with_box(DomainBox{}, {{"g0", 9.81}}));
  CHECK(rel_err(eval(grav.expr, Binding(0.5, 2.0, 0)), 2.0 - 9.81 * 0.5) <= 1e-12);
  CHECK(verify(grav, OdeSpec::from_rhs(constant(-9.81))).pass);

  for (const char* rtext : {"v^2", "v^3", "v^0.5"}) {
    const Expr rr = px(rtext);
    CHECK(verify(build_generalized_kinetic(f, rr, o), OdeSpec::generalized_kinetic(f, rr)).pass);
  }
  // No closed form: nested quadratures.
  const Expr rq = px("1 + v^2/4");
  const Lagrangian lq = build_generalized_kinetic(f, rq, o);
  CHECK(lq.expr.antideriv_depth() == 2);
  CHECK(verify(lq, OdeSpec::generalized_kinetic(f, rq)).pass);
  CHECK(code_of([&] { build_generalized_kinetic(f, px("v - 1"), o); }) == ErrorCode::kDomain);
}

// ----------------------------------------------------------------- radical

TEST_CASE("radical equal-exponent builder") {
  BuilderOptions o = with_box(positive_v_box());
  o.s0 = 1.0;
  const Lagrangian l5 = build_radical_equal(constant(0.5), kZero, 2.0, o);
  CHECK(rel_err(eval(l5.expr, Binding(0, 0.7, 1.1)), std::sqrt(0.49 + std::exp(-1.1))) <= 1e-12);
  CHECK(verify(l5, OdeSpec::radical_equal(constant(0.5), kZero, 2.0)).pass);

  // a = 0, b = b0, s0 = 0: A = -1/(2 b0 t), B = (2 b0 t)^-2.
  BuilderOptions z = with_box(DomainBox({-1, 1}, {0.2, 1.0}, {0.05, 2.0}));
  const Lagrangian lb = build_radical_equal(kZero, constant(0.3), 2.0, z);
  const double t = 0.8, v = 0.5;
  const double A = -1.0 / (0.6 * t), B = std::pow(0.6 * t, -2.0);
  CHECK(rel_err(eval(lb.expr, Binding(0, v, t)), std::sqrt(A * v * v + B)) <= 1e-12);
  CHECK(verify(lb, OdeSpec::radical_equal(kZero, constant(0.3), 2.0)).pass);

  // b = 0: A = A0, B = B0 e^{-nu int a}.
  const Lagrangian lc = build_radical_equal(px("0.3 + t"), kZero, 3.0, o);
  CHECK(verify(lc, OdeSpec::radical_equal(px("0.3 + t"), kZero, 3.0)).pass);

  CHECK(code_of([&] { build_radical_equal(kZero, kZero, 1.0, o); }) == ErrorCode::kBadExponent);
  CHECK(code_of([&] { build_radical_equal(kZero, kZero, 0.0, o); }) == ErrorCode::kBadExponent);
  CHECK(code_of([&] { build_radical_equal(kZero, kZero, 2.0, z); }) == ErrorCode::kZeroCrossing);
  BuilderOptions cross = o;
  cross.s0 = 1.0;
  CHECK(code_of([&] { build_radical_equal(kZero, constant(1.0), 2.0, cross); }) ==
        ErrorCode::kZeroCrossing);

  BuilderOptions printed = z;
  printed.printed_variant = true;
  const Lagrangian lp = build_radical_equal(kZero, constant(-0.3), 2.0, printed);
  CHECK_FALSE(verify(lp, OdeSpec::radical_equal(kZero, constant(-0.3), 2.0)).pass);
}

TEST_CASE("radical linear builder") {
  BuilderOptions o = with_box(DomainBox({-1, 1}, {0.2, 2.0}, {0.0, 2.0}), {{"g0", 9.81}});
  const Lagrangian lg = build_radical_linear(kZero, px("-g0", {"g0"}), 0.5, o);
  CHECK(rel_err(eval(lg.expr, Binding(0, 0.4, 1.5)), std::pow(0.4 + 9.81 * 1.5, 2.0)) <= 1e-12);
  CHECK(verify(lg, OdeSpec::affine(kZero, constant(-9.81))).pass);

  BuilderOptions ob = with_box(positive_v_box());
  ob.b0 = 1.0;
  const double mu = 3.0, k = 0.4;
  const Lagrangian lk = build_radical_linear(constant(k), kZero, mu, ob);
  const double t = 0.9, v = 0.6;
  CHECK(rel_err(eval(lk.expr, Binding(0, v, t)),
                std::cbrt(v * std::exp((mu - 1) * k * t) + std::exp(mu * k * t))) <= 1e-12);
  CHECK(verify(lk, OdeSpec::affine(constant(k), kZero)).pass);

  const Lagrangian lf = build_radical_linear(kZero, kZero, 0.25, with_box(positive_v_box()));
  CHECK(rel_err(eval(lf.expr, Binding(0, 1.3, 0)), std::pow(1.3, 4.0)) <= 1e-12);
  CHECK(verify(lf, OdeSpec::from_rhs(kZero)).pass);
  CHECK(code_of([&] { build_radical_linear(kZero, kZero, 1.0, ob); }) == ErrorCode::kBadExponent);
}

TEST_CASE("radical forward reductions match implied accelerations") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Expr A = px("exp(0.3*x + 0.2*t) + 0.5");
  const Expr B = px("1 + x^2 + 0.3*sin(t)");
  const std::vector<std::pair<double, double>> exps = {{2, 2}, {3, 3}, {0.5, 1}, {2, 1}, {3, 2},
                                                       {-1, 2}};
  for (const auto& [mu, nu] : exps) {
    const Expr rhs = radical_forward_rhs(A, B, mu, nu).assemble();
    const Expr L = pow(A * pow(var(Variable::kV), nu) + B, 1.0 / mu);
    int checked = 0;
    while (checked < 200) {
      const Point p{u(rng), 0.3 + 1.2 * (0.5 + 0.5 * u(rng)), u(rng)};
      const Binding b(p);
      if (std::fabs(eval_jet2(L, b).hess[3]) < 1e-3) continue;
      const double expected = implied_acceleration(L, b);
      CHECK(std::fabs(eval(rhs, b) - expected) <= 1e-8 * (1.0 + std::fabs(expected)));
      ++checked;
    }
  }
  // mu = nu with A, B of t.
  const Expr At = px("exp(0.5*t) + 1"), Bt = px("2 + sin(t)");
  const double nu = 3.0;
  const Expr r = radical_forward_rhs(At, Bt, nu, nu).assemble();
  const double t = 0.4, v = 0.7;
  const double a0 = std::exp(0.2) + 1, ad = 0.5 * std::exp(0.2), b0 = 2 + std::sin(0.4),
               bd = std::cos(0.4);
  const double expected = -(ad / ((nu - 1) * a0) - bd / (nu * b0)) * v -
                          ad / (nu * (nu - 1) * b0) * std::pow(v, nu + 1);
  CHECK(rel_err(eval(r, Binding(0, v, t)), expected) <= 1e-12);
  // nu = 1.
  const double mu = 3.0;
  const Expr r1 = radical_forward_rhs(At, Bt, mu, 1.0).assemble();
  const double e1 = ad * v / ((mu - 1) * a0) + mu * ad * b0 / ((mu - 1) * a0 * a0) - bd / a0;
  CHECK(rel_err(eval(r1, Binding(0, v, t)), e1) <= 1e-12);
  CHECK(eval(radical_forward_rhs(constant(1.0), constant(1.0), 2.0, 3.0).assemble(),
             Binding(0, v, t)) == 0.0);
}

// ----------------------------------------------------------------- multi-Lagrangian

TEST_CASE("exponential family builder") {
  BuilderOptions o = with_box(positive_v_box(), {{"k", 0.5}});
  const Expr xi = var(kXi);
  const Lagrangian lq = build_exponential_family(px("-k", {"k"}), kZero, 0.5 * pow(xi, 2.0), o);
  const double t = 1.2, v = 0.8;
  CHECK(rel_err(eval(lq.expr, Binding(0, v, t)),
                std::exp(-0.5 * t) * 0.5 * std::pow(v * std::exp(0.5 * t), 2)) <= 1e-12);
  CHECK(verify(lq, OdeSpec::affine(constant(-0.5), kZero)).pass);

  const Lagrangian lr = build_exponential_family(px("-k", {"k"}), kZero, pow(xi, -1.0), o);
  CHECK(rel_err(eval(lr.expr, Binding(0, v, t)), std::exp(-t) / v) <= 1e-12);

  BuilderOptions c0 = with_box(DomainBox{});
  c0.c0 = 0.3;
  const Lagrangian lf = build_exponential_family(kZero, kZero, 0.5 * pow(xi, 2.0), c0);
  CHECK(rel_err(eval(lf.expr, Binding(0, v, 0)), 0.5 * std::pow(v + 0.3, 2)) <= 1e-12);
  CHECK(code_of([&] { build_exponential_family(kZero, kZero, 2.0 * xi, c0); }) ==
        ErrorCode::kDegenerateLagrangian);

  const Expr a = px("sin(t)"), b = px("t^2 - 1");
  const Lagrangian lg = build_exponential_family(a, b, exp(xi), c0);
  CHECK(verify(lg, OdeSpec::affine(a, b)).pass);
}

TEST_CASE("composition with invariants of motion") {
  const ParameterMap k{{"k", 1.0}};
  const OdeSpec ode = OdeSpec::from_rhs(px("-k*v^2", {"k"}), k);
  const Lagrangian inv(px("v*exp(k*x)", {"k"}), Family::kCustom,
                       DomainBox({-1, 1}, {0.2, 2.0}, {0, 2}), k);
  const Expr xi = var(kXi);
  const Expr tanh = (exp(2.0 * xi) - 1.0) / (exp(2.0 * xi) + 1.0);
  const Lagrangian lt = compose_invariant(inv, ode, tanh);
  CHECK(lt.family == Family::kComposed);
  CHECK(verify(lt, ode, 1e-5).pass);

  BuilderOptions o = with_box(DomainBox({-1, 1}, {0.2, 2.0}, {0, 2}), k);
  const Lagrangian n3 = build_monomial(px("k", {"k"}), kZero, kZero, 3.0, o);
  CHECK(verify(compose_invariant(n3, ode, exp(xi)), ode, 1e-5).pass);
  const Lagrangian same = compose_invariant(n3, ode, xi);
  CHECK(structurally_equal(same.expr, n3.expr));

  const Lagrangian not_inv(px("0.5*v^2"), Family::kCustom, DomainBox({-1, 1}, {0.2, 2.0}, {0, 2}));
  CHECK(code_of([&] { compose_invariant(not_inv, ode, exp(xi)); }) == ErrorCode::kNotInvariant);
}

TEST_CASE("six Lagrangians of the linear drag equation are pairwise equivalent") {
  const double k = 0.5;
  const ParameterMap pk{{"k", k}};
  const DomainBox box = positive_v_box();
  BuilderOptions o = with_box(box, pk);
  const Expr kk = px("k", {"k"});
  std::vector<Lagrangian> ls;
  ls.push_back(build_standard(kZero, kk, kZero, o));
  ls.push_back(Lagrangian(px("1/(exp(2*k*t)*v + exp(k*t))", {"k"}), Family::kReciprocal, box, pk));
  ls.push_back(build_monomial(kZero, kk, kZero, 2.5, o));
  ls.push_back(build_generalized_kinetic(-kk, var(Variable::kV), o));
  BuilderOptions o5 = o;
  o5.s0 = 1.0;
  ls.push_back(build_radical_equal(kk, kZero, 2.0, o5));
  ls.push_back(build_exponential_family(-kk, kZero, 0.5 * pow(var(kXi), 2.0), o));
  const OdeSpec ode = OdeSpec::affine(constant(-k), kZero);
  for (const auto& l : ls) CHECK(verify(l, ode).pass);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    for (std::size_t j = i + 1; j < ls.size(); ++j) {
      CHECK(equivalence_check(ls[i], ls[j], box).equivalent);
    }
  }
  CHECK_FALSE(equivalence_check(Lagrangian(px("0.5*v^2")), ls[0], box).equivalent);
}

TEST_CASE("gauge constants and base points leave the dynamics unchanged") {
  const DomainBox box = positive_v_box();
  auto opts = [&](double x0, double t0) {
    BuilderOptions o = with_box(box);
    o.x0 = x0;
    o.t0 = t0;
    o.lambda = 0.5 + x0;
    o.s0 = 1.0 + t0;
    o.b0 = 2.0 + t0;
    o.c0 = 0.2 + x0;
    return o;
  };
  const std::vector<std::pair<double, double>> gauges = {{0.0, 0.0}, {0.3, -0.2}, {-0.5, 0.4}};
  auto all_equal = [&](const std::function<Lagrangian(const BuilderOptions&)>& build) {
    const Lagrangian ref = build(opts(0.0, 0.0));
    for (const auto& [x0, t0] : gauges) {
      const Lagrangian l = build(opts(x0, t0));
      INFO("family " << family_name(l.family) << " x0=" << x0 << " t0=" << t0);
      CHECK(equivalence_check(ref, l, box).max_rel_difference <= 1e-8);
    }
  };
  all_equal([](const BuilderOptions& o) {
    return build_standard(px("0.2*x"), px("0.3 + t"), px("x"), o);
  });
  all_equal([](const BuilderOptions& o) {
    return build_monomial(px("0.2*x"), px("0.3"), px("x + 1"), 3.0, o);
  });
  all_equal([](const BuilderOptions& o) {
    return build_reciprocal_nu2(px("0.2*x"), px("0.5 + t"), o);
  });
  all_equal([](const BuilderOptions& o) {
    return build_power_damping(px("0.2*x"), px("1 + x^2"), 3.0, o);
  });
  all_equal([](const BuilderOptions& o) {
    return build_generalized_kinetic(px("x*t"), px("1 + v^2"), o);
  });
  all_equal([](const BuilderOptions& o) {
    return build_radical_equal(px("0.3"), px("0.1"), 2.0, o);
  });
  all_equal([](const BuilderOptions& o) {
    return build_radical_linear(px("0.3"), px("0.1*t"), 2.0, o);
  });
  all_equal([](const BuilderOptions& o) {
    return build_exponential_family(px("0.3"), px("t"), pow(var(kXi), 2.0), o);
  });
  all_equal([](const BuilderOptions& o) {
    return build_reciprocal_linear(px("0.3"), px("-0.5"), o);
  });
  all_equal([](const BuilderOptions& o) {
    // c is fixed by the equation; only the builder's own base point varies.
    const Expr b = px("1 + x^2");
    return build_reciprocal_autonomous(kZero, b, c_from_ab(kZero, b), o);
  });
}

TEST_CASE("master round trip over randomized coefficients") {
  std::mt19937_64 rng(20240601);
  for (const auto& bc : lagrangeforge::testing::builder_cases()) {
    for (int trial = 0; trial < 8; ++trial) {
      INFO("builder " << bc.name << " trial " << trial);
      const auto built = bc.make(rng);
      const auto r = el_residual_field(built.lagrangian, built.ode, built.lagrangian.domain,
                                       built.tol);
      CHECK(r.pass);
      CHECK(r.max_rel_residual <= built.tol);
    }
  }
}
