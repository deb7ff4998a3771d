#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lagrangeforge/eval.hpp"
#include "lagrangeforge/expr.hpp"
#include "lagrangeforge/parallel.hpp"

namespace lagrangeforge {

inline constexpr double kDefaultRegularity = 1e-9;

using ParameterMap = std::map<std::string, double>;

enum class Family {
  kStandard,
  kReciprocal,
  kMonomial,
  kGeneralizedKinetic,
  kRadical,
  kExponential,
  kComposed,
  kCustom
};
std::string_view family_name(Family f);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double u) const { return u >= lo && u <= hi; }
};

// A sample point is excluded when its guard is too close to a singular
// stratum: |guard| < radius (kAwayFromZero) or guard < radius (kPositive).
// Points where the guard itself cannot be evaluated are excluded as well;
// kDefined excludes only those (its guard is evaluated with second-order jets).
struct Exclusion {
  enum class Kind { kAwayFromZero, kPositive, kDefined };
  Expr guard;
  Kind kind = Kind::kAwayFromZero;
  double radius = 1e-2;
  std::string label;
};

struct DomainBox {
  Interval x{-1.0, 1.0};
  Interval v{-1.0, 1.0};
  Interval t{0.0, 1.0};
  int grid = 7;
  int random_points = 100;
  std::uint64_t seed = 20240601;
  std::vector<Exclusion> exclusions;

  DomainBox() = default;
  DomainBox(Interval xi, Interval vi, Interval ti) : x(xi), v(vi), t(ti) {}

  // Tensor grid followed by seeded uniform random points, before exclusions.
  std::vector<Point> raw_points() const;
  // Points that survive every exclusion; throws kEmptyDomain when none do.
  std::vector<Point> sample_points(const ParameterMap& params = {}) const;
  bool excluded(const Point& p, const ParameterMap& params) const;
  void add_exclusion(Expr guard, Exclusion::Kind kind, std::string label, double radius = 1e-2);
};

struct Lagrangian {
  Expr expr;
  Family family = Family::kCustom;
  DomainBox domain;
  ParameterMap params;
  // Base points and integration constants used by the construction.
  std::vector<std::pair<std::string, double>> gauge;
  // Corrections of printed formulas that were applied by the builder.
  std::vector<std::string> notes;

  Lagrangian() = default;
  Lagrangian(Expr e, Family f = Family::kCustom, DomainBox box = {}, ParameterMap p = {})
      : expr(std::move(e)), family(f), domain(std::move(box)), params(std::move(p)) {}

  Binding binding(const Point& p) const;
};

// Canonical coefficient forms of the target equation.
enum class OdeForm {
  kRaw,
  kStandard,            // x'' + a v^2 + b v + c = 0
  kLinear,              // x'' + b(t) v + c(t) x = 0
  kMonomial,            // x'' + a v^2 + b v + c v^(2-mu) = 0
  kPowerDamping,        // x'' = -a v^2 - c v^nu
  kGeneralizedKinetic,  // x'' = R(v) f(x,t), stored as a = f, b = R
  kRadicalEqual,        // x'' = -a(t) v - b(t) v^(nu+1)
  kAffine               // x'' = a(t) v + b(t)
};

struct CoefficientView {
  OdeForm form = OdeForm::kRaw;
  Expr a, b, c;
  double exponent = 0.0;
};

struct OdeSpec {
  Expr rhs;  // x'' = rhs(x, v, t)
  ParameterMap params;
  std::optional<CoefficientView> view;

  static OdeSpec from_rhs(Expr rhs, ParameterMap params = {});
  static OdeSpec standard(Expr a, Expr b, Expr c, ParameterMap params = {});
  static OdeSpec linear(Expr b, Expr c, ParameterMap params = {});
  static OdeSpec monomial(Expr a, Expr b, Expr c, double mu, ParameterMap params = {});
  static OdeSpec power_damping(Expr a, Expr c, double nu, ParameterMap params = {});
  static OdeSpec generalized_kinetic(Expr f, Expr r, ParameterMap params = {});
  static OdeSpec radical_equal(Expr a, Expr b, double nu, ParameterMap params = {});
  static OdeSpec affine(Expr a, Expr b, ParameterMap params = {});

  Binding binding(const Point& p) const;
  double rhs_at(const Point& p) const;
};

struct VerificationReport {
  double max_rel_residual = 0.0;
  Point argmax;
  int samples_used = 0;
  double regularity_min = 0.0;
  double tolerance = 0.0;
  double regularity_threshold = kDefaultRegularity;
  bool pass = false;
};

struct InvarianceReport {
  double max_rate = 0.0;   // max |dL/dt| / (1 + |L|) along the samples
  double max_drift = 0.0;  // max |L(sample) - L(start)|
  int samples_used = 0;
  bool pass = false;
};

struct Trajectory;

// Builds a binding from a point plus the union of both parameter maps.
Binding merged_binding(const Point& p, const ParameterMap& a, const ParameterMap& b = {});

std::string describe_point(const Point& p);

// (L_x - L_vx v - L_vt) / L_vv; throws kDegenerateLagrangian when
// |L_vv| < eps_reg.
double implied_acceleration(const Expr& L, const Binding& b, double eps_reg = kDefaultRegularity);
double implied_acceleration(const Lagrangian& L, const Point& p,
                            double eps_reg = kDefaultRegularity);

// Euler-Lagrange expression d/dt(L_v) - L_x evaluated with a prescribed x''.
double euler_lagrange_residual(const Expr& L, const Binding& b, double acceleration);

VerificationReport el_residual_field(const Lagrangian& L, const OdeSpec& ode,
                                     const DomainBox& box, double tol = 1e-6,
                                     Execution exec = Execution::kParallel,
                                     double eps_reg = kDefaultRegularity);
inline VerificationReport el_residual_field(const Lagrangian& L, const OdeSpec& ode,
                                            double tol = 1e-6,
                                            Execution exec = Execution::kParallel) {
  return el_residual_field(L, ode, L.domain, tol, exec);
}

double legendre_momentum(const Lagrangian& L, const Point& p);
double invert_momentum(const Lagrangian& L, double x, double p, double t, Interval v_bracket);
double hamiltonian_value(const Lagrangian& L, double x, double p, double t, Interval v_bracket);
double energy_function(const Lagrangian& L, const Point& p);

InvarianceReport is_invariant_of_motion(const Lagrangian& L, const OdeSpec& ode,
                                        const Trajectory& traj, double tol = 1e-6);

}  // namespace lagrangeforge
