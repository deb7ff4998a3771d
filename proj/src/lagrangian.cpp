#include "lagrangeforge/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <tuple>

#include "lagrangeforge/dynamics.hpp"
#include "lagrangeforge/error.hpp"

namespace lagrangeforge {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kStandard: return "standard";
    case Family::kReciprocal: return "reciprocal";
    case Family::kMonomial: return "monomial";
    case Family::kGeneralizedKinetic: return "generalized-kinetic";
    case Family::kRadical: return "radical";
    case Family::kExponential: return "exponential";
    case Family::kComposed: return "composed";
    case Family::kCustom: return "custom";
  }
  return "custom";
}

std::string describe_point(const Point& p) {
  std::ostringstream out;
  out.precision(17);
  out << "(x=" << p.x << ", v=" << p.v << ", t=" << p.t << ")";
  return out.str();
}

Binding merged_binding(const Point& p, const ParameterMap& a, const ParameterMap& b) {
  Binding out(p);
  out.params.reserve(a.size() + b.size());
  for (const auto& [k, value] : a) out.params.emplace_back(k, value);
  for (const auto& [k, value] : b) {
    if (a.find(k) == a.end()) out.params.emplace_back(k, value);
  }
  return out;
}

// ---------------------------------------------------------------- DomainBox

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double grid_coordinate(const Interval& iv, int i, int n) {
  if (n <= 1) return iv.mid();
  if (i == n - 1) return iv.hi;
  return iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

std::vector<Point> DomainBox::raw_points() const {
  if (!(x.lo <= x.hi) || !(v.lo <= v.hi) || !(t.lo <= t.hi) || grid < 0 || random_points < 0) {
    throw Error(ErrorCode::kSchema, "invalid domain box");
  }
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(grid * grid * grid + random_points));
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      for (int k = 0; k < grid; ++k) {
        pts.push_back({grid_coordinate(x, i, grid), grid_coordinate(v, j, grid),
                       grid_coordinate(t, k, grid)});
      }
    }
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < random_points; ++i) {
    const double ux = unit_uniform(rng);
    const double uv = unit_uniform(rng);
    const double ut = unit_uniform(rng);
    pts.push_back({x.lo + (x.hi - x.lo) * ux, v.lo + (v.hi - v.lo) * uv,
                   t.lo + (t.hi - t.lo) * ut});
  }
  return pts;
}

bool DomainBox::excluded(const Point& p, const ParameterMap& params) const {
  if (exclusions.empty()) return false;
  const Binding b = merged_binding(p, params);
  for (const Exclusion& ex : exclusions) {
    double g = 0.0;
    try {
      if (ex.kind == Exclusion::Kind::kDefined) {
        eval_jet2(ex.guard, b);
        continue;
      }
      g = eval(ex.guard, b);
    } catch (const Error&) {
      return true;
    }
    if (ex.kind == Exclusion::Kind::kAwayFromZero ? std::fabs(g) < ex.radius : g < ex.radius) {
      return true;
    }
  }
  return false;
}

std::vector<Point> DomainBox::sample_points(const ParameterMap& params) const {
  std::vector<Point> kept;
  for (const Point& p : raw_points()) {
    if (!excluded(p, params)) kept.push_back(p);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kEmptyDomain, "no sample points remain after exclusions");
  }
  return kept;
}

void DomainBox::add_exclusion(Expr guard, Exclusion::Kind kind, std::string label,
                              double radius) {
  exclusions.push_back({std::move(guard), kind, radius, std::move(label)});
}

Binding Lagrangian::binding(const Point& p) const { return merged_binding(p, params); }

// ---------------------------------------------------------------- OdeSpec

namespace {

const Expr& vx() {
  static const Expr e = var(Variable::kV);
  return e;
}

OdeSpec with_view(Expr rhs, ParameterMap params, OdeForm form, Expr a, Expr b, Expr c,
                  double exponent) {
  OdeSpec spec;
  spec.rhs = std::move(rhs);
  spec.params = std::move(params);
  spec.view = CoefficientView{form, std::move(a), std::move(b), std::move(c), exponent};
  return spec;
}

}  // namespace

OdeSpec OdeSpec::from_rhs(Expr rhs, ParameterMap params) {
  OdeSpec spec;
  spec.rhs = std::move(rhs);
  spec.params = std::move(params);
  return spec;
}

OdeSpec OdeSpec::standard(Expr a, Expr b, Expr c, ParameterMap params) {
  Expr rhs = neg(a * pow(vx(), 2.0) + b * vx() + c);
  return with_view(std::move(rhs), std::move(params), OdeForm::kStandard, a, b, c, 0.0);
}

OdeSpec OdeSpec::linear(Expr b, Expr c, ParameterMap params) {
  Expr rhs = neg(b * vx() + c * var(Variable::kX));
  return with_view(std::move(rhs), std::move(params), OdeForm::kLinear, Expr(), b, c, 0.0);
}

OdeSpec OdeSpec::monomial(Expr a, Expr b, Expr c, double mu, ParameterMap params) {
  Expr rhs = neg(a * pow(vx(), 2.0) + b * vx() + c * pow(vx(), 2.0 - mu));
  return with_view(std::move(rhs), std::move(params), OdeForm::kMonomial, a, b, c, mu);
}

OdeSpec OdeSpec::power_damping(Expr a, Expr c, double nu, ParameterMap params) {
  Expr rhs = neg(a * pow(vx(), 2.0) + c * pow(vx(), nu));
  return with_view(std::move(rhs), std::move(params), OdeForm::kPowerDamping, a, Expr(), c, nu);
}

OdeSpec OdeSpec::generalized_kinetic(Expr f, Expr r, ParameterMap params) {
  Expr rhs = r * f;
  return with_view(std::move(rhs), std::move(params), OdeForm::kGeneralizedKinetic, f, r,
                   Expr(), 0.0);
}

OdeSpec OdeSpec::radical_equal(Expr a, Expr b, double nu, ParameterMap params) {
  Expr rhs = neg(a * vx() + b * pow(vx(), nu + 1.0));
  return with_view(std::move(rhs), std::move(params), OdeForm::kRadicalEqual, a, b, Expr(), nu);
}

OdeSpec OdeSpec::affine(Expr a, Expr b, ParameterMap params) {
  Expr rhs = a * vx() + b;
  return with_view(std::move(rhs), std::move(params), OdeForm::kAffine, a, b, Expr(), 0.0);
}

Binding OdeSpec::binding(const Point& p) const { return merged_binding(p, params); }

double OdeSpec::rhs_at(const Point& p) const { return eval(rhs, binding(p)); }

// ---------------------------------------------------------------- verifier

double implied_acceleration(const Expr& L, const Binding& b, double eps_reg) {
  const Jet2 j = eval_jet2(L, b);
  const double lvv = j.dd(Variable::kV, Variable::kV);
  if (!(std::fabs(lvv) >= eps_reg)) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "degenerate Lagrangian: |L_vv| = " << std::fabs(lvv) << " < " << eps_reg << " at "
        << describe_point(b.point);
    throw Error(ErrorCode::kDegenerateLagrangian, msg.str());
  }
  const double v = b.point.v;
  return (j.d(Variable::kX) - j.dd(Variable::kV, Variable::kX) * v -
          j.dd(Variable::kV, Variable::kT)) /
         lvv;
}

double implied_acceleration(const Lagrangian& L, const Point& p, double eps_reg) {
  return implied_acceleration(L.expr, L.binding(p), eps_reg);
}

double euler_lagrange_residual(const Expr& L, const Binding& b, double acceleration) {
  const Jet2 j = eval_jet2(L, b);
  return j.dd(Variable::kV, Variable::kV) * acceleration +
         j.dd(Variable::kV, Variable::kX) * b.point.v + j.dd(Variable::kV, Variable::kT) -
         j.d(Variable::kX);
}

namespace {

DomainBox with_lagrangian_exclusions(const DomainBox& box, const Lagrangian& L) {
  DomainBox out = box;
  for (const Exclusion& ex : L.domain.exclusions) {
    const bool present = std::any_of(box.exclusions.begin(), box.exclusions.end(),
                                     [&](const Exclusion& e) {
                                       return e.label == ex.label &&
                                              structurally_equal(e.guard, ex.guard);
                                     });
    if (!present) out.exclusions.push_back(ex);
  }
  return out;
}

bool lexicographically_less(const Point& a, const Point& b) {
  return std::tie(a.x, a.v, a.t) < std::tie(b.x, b.v, b.t);
}

}  // namespace

VerificationReport el_residual_field(const Lagrangian& L, const OdeSpec& ode,
                                     const DomainBox& box, double tol, Execution exec,
                                     double eps_reg) {
  ParameterMap params = ode.params;
  for (const auto& [k, value] : L.params) params[k] = value;
  const DomainBox effective = with_lagrangian_exclusions(box, L);
  const std::vector<Point> pts = effective.sample_points(params);

  struct Sample {
    double residual = 0.0;
    double regularity = 0.0;
  };
  std::vector<Sample> samples(pts.size());
  for_each_index(pts.size(), exec, [&](std::size_t i) {
    const Binding b = merged_binding(pts[i], params);
    const Jet2 j = eval_jet2(L.expr, b);
    const double lvv = j.dd(Variable::kV, Variable::kV);
    if (!(std::fabs(lvv) >= eps_reg)) {
      std::ostringstream msg;
      msg.precision(6);
      msg << "degenerate Lagrangian: |L_vv| = " << std::fabs(lvv) << " < " << eps_reg << " at "
          << describe_point(pts[i]);
      throw Error(ErrorCode::kDegenerateLagrangian, msg.str());
    }
    const double accel = (j.d(Variable::kX) - j.dd(Variable::kV, Variable::kX) * pts[i].v -
                          j.dd(Variable::kV, Variable::kT)) /
                         lvv;
    const double rhs = eval(ode.rhs, b);
    double residual = std::fabs(accel - rhs) / (1.0 + std::fabs(rhs));
    if (!std::isfinite(residual)) residual = std::numeric_limits<double>::infinity();
    samples[i] = {residual, std::fabs(lvv)};
  });

  VerificationReport report;
  report.tolerance = tol;
  report.regularity_threshold = eps_reg;
  report.samples_used = static_cast<int>(pts.size());
  report.regularity_min = std::numeric_limits<double>::infinity();
  report.max_rel_residual = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    report.regularity_min = std::fmin(report.regularity_min, samples[i].regularity);
    const double r = samples[i].residual;
    if (r > report.max_rel_residual ||
        (r == report.max_rel_residual && lexicographically_less(pts[i], report.argmax))) {
      report.max_rel_residual = r;
      report.argmax = pts[i];
    }
  }
  report.pass = report.max_rel_residual <= tol && report.regularity_min >= eps_reg;
  return report;
}

// ---------------------------------------------------------------- Legendre

double legendre_momentum(const Lagrangian& L, const Point& p) {
  return eval_jet2(L.expr, L.binding(p)).d(Variable::kV);
}

double invert_momentum(const Lagrangian& L, double x, double p, double t, Interval bracket) {
  if (!(bracket.lo < bracket.hi)) {
    throw Error(ErrorCode::kBracket, "velocity bracket must satisfy lo < hi");
  }
  const auto momentum = [&](double v) {
    const Jet2 j = eval_jet2(L.expr, L.binding({x, v, t}));
    return std::pair<double, double>{j.d(Variable::kV) - p, j.dd(Variable::kV, Variable::kV)};
  };
  double lo = bracket.lo;
  double hi = bracket.hi;
  auto [flo, dlo] = momentum(lo);
  auto [fhi, dhi] = momentum(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "momentum " << p << " is not bracketed by v in [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::kBracket, msg.str());
  }
  const double dir = fhi > flo ? 1.0 : -1.0;
  const auto non_monotone = [&](double v) {
    throw Error(ErrorCode::kNonMonotone,
                "momentum is not monotone in v near " + describe_point({x, v, t}));
  };
  if (dlo * dir < 0.0) non_monotone(lo);
  if (dhi * dir < 0.0) non_monotone(hi);

  const double target = 1e-10 * (1.0 + std::fabs(p));
  double v = lo - flo * (hi - lo) / (fhi - flo);
  double best_v = v;
  double best_f = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const auto [f, d] = momentum(v);
    if (std::fabs(f) < best_f) {
      best_f = std::fabs(f);
      best_v = v;
    }
    if (f == 0.0 || (std::fabs(f) <= 1e-3 * target)) break;
    if (d * dir < 0.0) non_monotone(v);
    if (f * dir < 0.0) {
      lo = v;
    } else {
      hi = v;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(v))) break;
    const double newton = d != 0.0 ? v - f / d : lo - 1.0;
    v = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
  }
  if (best_f > target) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "momentum inversion did not converge (residual " << best_f << ")";
    throw Error(ErrorCode::kNonMonotone, msg.str());
  }
  return best_v;
}

double hamiltonian_value(const Lagrangian& L, double x, double p, double t, Interval bracket) {
  const double v = invert_momentum(L, x, p, t, bracket);
  return p * v - eval(L.expr, L.binding({x, v, t}));
}

double energy_function(const Lagrangian& L, const Point& p) {
  const Jet2 j = eval_jet2(L.expr, L.binding(p));
  return p.v * j.d(Variable::kV) - j.value;
}

InvarianceReport is_invariant_of_motion(const Lagrangian& L, const OdeSpec& ode,
                                        const Trajectory& traj, double tol) {
  InvarianceReport report;
  if (traj.size() == 0) return report;
  double l0 = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Point p = traj.node(i);
    const Binding b = merged_binding(p, L.params, ode.params);
    const Jet2 j = eval_jet2(L.expr, b);
    const double f = eval(ode.rhs, b);
    const double rate = std::fabs(j.d(Variable::kX) * p.v + j.d(Variable::kV) * f +
                                  j.d(Variable::kT)) /
                        (1.0 + std::fabs(j.value));
    if (i == 0) l0 = j.value;
    report.max_rate = std::fmax(report.max_rate, rate);
    report.max_drift = std::fmax(report.max_drift, std::fabs(j.value - l0));
  }
  report.samples_used = static_cast<int>(traj.size());
  report.pass = report.max_rate <= tol && report.max_drift <= tol;
  return report;
}

}  // namespace lagrangeforge
