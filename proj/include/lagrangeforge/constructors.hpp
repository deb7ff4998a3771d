#pragma once

#include <string>

#include "lagrangeforge/lagrangian.hpp"

namespace lagrangeforge {

struct BuilderOptions {
  double x0 = 0.0;  // base point of x-quadratures
  double t0 = 0.0;  // base point of t-quadratures
  Expr q;           // Q(x, t) of the standard family (default 0)
  double lambda = 0.0;  // gauge constant of c_from_ab
  double s0 = 0.0;      // gauge constant of the equal-exponent radical family
  double b0 = 0.0;      // gauge constant of the linear radical family
  double c0 = 0.0;      // additive constant inside the exponential family
  DomainBox domain;     // requested validity domain
  ParameterMap params;  // numeric parameter values substituted into the coefficients
  double tol = 1e-6;    // tolerance of mandatory post-verification
  double eps_reg = kDefaultRegularity;
  // Reproduce the uncorrected printed formula (used only as a negative control;
  // skips post-verification).
  bool printed_variant = false;
};

// Residual of a coefficient condition over a sampling grid.
struct AdmissibilityReport {
  double residual = 0.0;
  Point argmax;
  bool admissible = false;
  std::string reason;
};

struct StandardCoeffs {
  Expr P, Q, R;
};

// Coefficients of x'' = N(v) / D(v), with
//   N = p v^(2nu) + q v^(2nu-1) + r v^nu + s v^(nu-1) + w and
//   D = g v^(nu-2) - h v^(2nu-2)  (reciprocal 1/(F v^nu + G)),
//   D = g v^(2nu-2) + h v^(nu-2)  (radical (A v^nu + B)^(1/mu)).
struct RhsCoefficients {
  Expr p, q, r, s, w, g, h;
  double mu = 1.0;
  double nu = 1.0;
  bool radical = false;
  Expr assemble() const;
};

// Applies opts.params to an expression.
Expr bind_parameters(const Expr& e, const BuilderOptions& opts);

// x'' + a v^2 + b v + c = 0 with a, b, c of (x, t): b_x = 2 a_t.
AdmissibilityReport admissible_standard(const Expr& a, const Expr& b, const Expr& c,
                                        const BuilderOptions& opts = {});
StandardCoeffs standard_coefficients(const Expr& a, const Expr& b, const Expr& c,
                                     const BuilderOptions& opts = {});
Lagrangian build_standard(const Expr& a, const Expr& b, const Expr& c,
                          const BuilderOptions& opts = {});
// H = (p - Q)^2 / (2P) - R, in x, t and the parameter "p".
Expr standard_hamiltonian(const StandardCoeffs& sc);

// Autonomous reciprocal family x'' + a v^2 + b v + c = 0 with a, b, c of x.
Expr c_from_ab(const Expr& a, const Expr& b, const BuilderOptions& opts = {});
Expr a_from_bc(const Expr& b, const Expr& c, Interval x_range, const BuilderOptions& opts = {});
// max |c_x + (a - b_x/b) c - (2/9) b^2| over the x-grid (points where b = 0 skipped).
AdmissibilityReport reciprocal_constraint(const Expr& a, const Expr& b, const Expr& c,
                                          Interval x_range, const BuilderOptions& opts = {});
Lagrangian build_reciprocal_autonomous(const Expr& a, const Expr& b, const Expr& c,
                                       const BuilderOptions& opts = {});

// x'' + b(t) v + c(t) x = 0 with L = 1/(f v + g x); f = w^3 from an auxiliary
// linear equation solved numerically.
Lagrangian build_reciprocal_linear(const Expr& b, const Expr& c, const BuilderOptions& opts = {});
// x'' + a(x) v^2 + b(t) v = 0 with L = 1/(F v^2 + G).
Lagrangian build_reciprocal_nu2(const Expr& a, const Expr& b, const BuilderOptions& opts = {});

// x'' + a v^2 + b v + c v^(2-mu) = 0 with L = F v^mu - G.
AdmissibilityReport admissible_monomial(const Expr& a, const Expr& b, double mu,
                                        const BuilderOptions& opts = {});
Lagrangian build_monomial(const Expr& a, const Expr& b, const Expr& c, double mu,
                          const BuilderOptions& opts = {});
// x'' = -a(x) v^2 - c(x) v^nu with L = F v^(2-nu) - G.
Lagrangian build_power_damping(const Expr& a, const Expr& c, double nu,
                               const BuilderOptions& opts = {});
// x'' = R(v) f(x, t) with L = Psi(v) + G(x, t), Psi'' = 1/R, G_x = f.
Lagrangian build_generalized_kinetic(const Expr& f, const Expr& r,
                                     const BuilderOptions& opts = {});

// x'' = -a(t) v - b(t) v^(nu+1) with L = (A v^nu + B)^(1/nu).
Lagrangian build_radical_equal(const Expr& a, const Expr& b, double nu,
                               const BuilderOptions& opts = {});
// x'' = a(t) v + b(t) with L = (A v + B)^(1/mu).
Lagrangian build_radical_linear(const Expr& a, const Expr& b, double mu,
                                const BuilderOptions& opts = {});
// x'' = a(t) v + b(t) with L = e^{int a} F(v e^{-int a} - int b e^{-int a} + c0);
// F is an expression in the parameter "xi".
Lagrangian build_exponential_family(const Expr& a, const Expr& b, const Expr& f,
                                    const BuilderOptions& opts = {});
// F(L) for an invariant of motion L of `ode`; F is an expression in "xi".
Lagrangian compose_invariant(const Lagrangian& L, const OdeSpec& ode, const Expr& f,
                             const BuilderOptions& opts = {});

// Forward reductions used as oracles.
RhsCoefficients reciprocal_forward_rhs(const Expr& F, const Expr& G, double nu);
RhsCoefficients radical_forward_rhs(const Expr& A, const Expr& B, double mu, double nu);

// Name of the one-variable argument used by F in the exponential and
// composition builders.
inline constexpr const char* kXi = "xi";

}  // namespace lagrangeforge
