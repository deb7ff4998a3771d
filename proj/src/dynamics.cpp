#include "lagrangeforge/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "lagrangeforge/error.hpp"

namespace lagrangeforge {

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !(rel_tol > 0.0) || !(abs_tol > 0.0) || max_steps <= 0 ||
      !(overflow_guard > 0.0)) {
    throw Error(ErrorCode::kSchema, "integrator steps and tolerances must be positive");
  }
}

Point Trajectory::state_at(double t) const {
  if (times.empty() || t < times.front() || t > times.back()) {
    throw Error(ErrorCode::kDomain, "time outside the trajectory range");
  }
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  if (i + 1 >= times.size()) return node(times.size() - 1);
  if (t == times[i]) return node(i);
  const double h = times[i + 1] - times[i];
  const double s = (t - times[i]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return {h00 * x[i] + h10 * h * v[i] + h01 * x[i + 1] + h11 * h * v[i + 1],
          h00 * v[i] + h10 * h * a[i] + h01 * v[i + 1] + h11 * h * a[i + 1], t};
}

namespace {

struct State {
  double x;
  double v;
};

class Rhs {
 public:
  explicit Rhs(const OdeSpec& ode) : ode_(ode), binding_(ode.binding({})) {}
  double operator()(double t, const State& s) {
    binding_.point = {s.x, s.v, t};
    return eval(ode_.rhs, binding_);
  }

 private:
  const OdeSpec& ode_;
  Binding binding_;
};

void guard(const State& s, double t, double limit) {
  if (!std::isfinite(s.x) || !std::isfinite(s.v) || std::fabs(s.x) > limit ||
      std::fabs(s.v) > limit) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "state exceeded overflow guard " << limit << " near t=" << t;
    throw Error(ErrorCode::kOverflow, msg.str());
  }
}

void push(Trajectory& traj, double t, const State& s, double accel) {
  traj.times.push_back(t);
  traj.x.push_back(s.x);
  traj.v.push_back(s.v);
  traj.a.push_back(accel);
}

Trajectory integrate_rk4(Rhs& f, State s, double t0, double t1, const IntegratorConfig& cfg) {
  Trajectory traj;
  const auto n = static_cast<long long>(std::ceil((t1 - t0) / cfg.step - 1e-9));
  const long long steps = std::max<long long>(n, 1);
  if (steps > cfg.max_steps) {
    throw Error(ErrorCode::kStepUnderflow, "fixed step would exceed the maximum step count");
  }
  const double h = (t1 - t0) / static_cast<double>(steps);
  double accel = f(t0, s);
  push(traj, t0, s, accel);
  for (long long i = 0; i < steps; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    const double k1x = s.v;
    const double k1v = accel;
    const State s2{s.x + 0.5 * h * k1x, s.v + 0.5 * h * k1v};
    const double k2x = s2.v;
    const double k2v = f(t + 0.5 * h, s2);
    const State s3{s.x + 0.5 * h * k2x, s.v + 0.5 * h * k2v};
    const double k3x = s3.v;
    const double k3v = f(t + 0.5 * h, s3);
    const State s4{s.x + h * k3x, s.v + h * k3v};
    const double k4x = s4.v;
    const double k4v = f(t + h, s4);
    s.x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0;
    s.v += h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0;
    const double tn = i + 1 == steps ? t1 : t0 + static_cast<double>(i + 1) * h;
    guard(s, tn, cfg.overflow_guard);
    accel = f(tn, s);
    push(traj, tn, s, accel);
    ++traj.stats.steps;
  }
  return traj;
}

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

Trajectory integrate_rk45(Rhs& f, State s, double t0, double t1, const IntegratorConfig& cfg) {
  Trajectory traj;
  double t = t0;
  double h = std::min(cfg.step, t1 - t0);
  double accel = f(t, s);
  push(traj, t, s, accel);
  std::array<double, 7> kx{}, kv{};
  while (t < t1) {
    if (traj.stats.steps + traj.stats.rejected >= cfg.max_steps) {
      throw Error(ErrorCode::kStepUnderflow, "maximum number of integrator steps exceeded");
    }
    if (t + h > t1 || t1 - (t + h) < 1e-12 * h) h = t1 - t;
    if (h <= 1e-14 * std::fmax(1.0, std::fabs(t))) {
      std::ostringstream msg;
      msg.precision(10);
      msg << "step size underflow near t=" << t << " (stiff or singular equation)";
      throw Error(ErrorCode::kStepUnderflow, msg.str());
    }
    kx[0] = s.v;
    kv[0] = accel;
    const auto stage = [&](double ct, std::initializer_list<double> coeffs) {
      State y = s;
      std::size_t j = 0;
      for (double c : coeffs) {
        y.x += h * c * kx[j];
        y.v += h * c * kv[j];
        ++j;
      }
      return std::pair<State, double>{y, t + ct * h};
    };
    auto [y2, t2] = stage(c2, {a21});
    kx[1] = y2.v;
    kv[1] = f(t2, y2);
    auto [y3, t3] = stage(c3, {a31, a32});
    kx[2] = y3.v;
    kv[2] = f(t3, y3);
    auto [y4, t4] = stage(c4, {a41, a42, a43});
    kx[3] = y4.v;
    kv[3] = f(t4, y4);
    auto [y5, t5] = stage(c5, {a51, a52, a53, a54});
    kx[4] = y5.v;
    kv[4] = f(t5, y5);
    auto [y6, t6] = stage(1.0, {a61, a62, a63, a64, a65});
    kx[5] = y6.v;
    kv[5] = f(t6, y6);
    const State next{s.x + h * (b1 * kx[0] + b3 * kx[2] + b4 * kx[3] + b5 * kx[4] + b6 * kx[5]),
                     s.v + h * (b1 * kv[0] + b3 * kv[2] + b4 * kv[3] + b5 * kv[4] + b6 * kv[5])};
    const double tn = (h == t1 - t) ? t1 : t + h;
    guard(next, tn, cfg.overflow_guard);
    const double accel_next = f(tn, next);
    kx[6] = next.v;
    kv[6] = accel_next;
    const double errx =
        h * (e1 * kx[0] + e3 * kx[2] + e4 * kx[3] + e5 * kx[4] + e6 * kx[5] + e7 * kx[6]);
    const double errv =
        h * (e1 * kv[0] + e3 * kv[2] + e4 * kv[3] + e5 * kv[4] + e6 * kv[5] + e7 * kv[6]);
    const double scale_x = cfg.tolerance(std::fmax(std::fabs(s.x), std::fabs(next.x)));
    const double scale_v = cfg.tolerance(std::fmax(std::fabs(s.v), std::fabs(next.v)));
    const double err = std::fmax(std::fabs(errx) / scale_x, std::fabs(errv) / scale_v);
    if (!std::isfinite(err)) {
      h *= 0.2;
      ++traj.stats.rejected;
      continue;
    }
    if (err <= 1.0) {
      t = tn;
      s = next;
      accel = accel_next;
      push(traj, t, s, accel);
      ++traj.stats.steps;
      traj.stats.max_error_estimate =
          std::fmax(traj.stats.max_error_estimate, std::fmax(std::fabs(errx), std::fabs(errv)));
    } else {
      ++traj.stats.rejected;
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
  }
  return traj;
}

}  // namespace

Trajectory integrate_ode(const OdeSpec& ode, double x0, double v0, double t0, double t1,
                         const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(t1 > t0)) throw Error(ErrorCode::kSchema, "integration requires t1 > t0");
  Rhs f(ode);
  const State s{x0, v0};
  guard(s, t0, cfg.overflow_guard);
  Trajectory traj = cfg.method == Method::kRk4Fixed ? integrate_rk4(f, s, t0, t1, cfg)
                                                    : integrate_rk45(f, s, t0, t1, cfg);
  traj.params = ode.params;
  return traj;
}

MonitorSeries monitor_quantity(const Trajectory& traj, const Expr& q,
                               const ParameterMap& extra_params) {
  MonitorSeries out;
  out.times = traj.times;
  out.values.resize(traj.size());
  out.rates.resize(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    try {
      const Point p = traj.node(i);
      const Jet2 j = eval_jet2(q, merged_binding(p, extra_params, traj.params));
      out.values[i] = j.value;
      out.rates[i] = j.d(Variable::kX) * p.v + j.d(Variable::kV) * traj.a[i] + j.d(Variable::kT);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + std::to_string(i) + ": " + e.what());
    }
    out.max_drift = std::fmax(out.max_drift, std::fabs(out.values[i] - out.values[0]));
    out.max_rate = std::fmax(out.max_rate, std::fabs(out.rates[i]));
  }
  return out;
}

EquivalenceReport equivalence_check(const Lagrangian& l1, const Lagrangian& l2,
                                    const DomainBox& box, double tol, Execution exec) {
  DomainBox effective = box;
  for (const Lagrangian* l : {&l1, &l2}) {
    for (const Exclusion& ex : l->domain.exclusions) effective.exclusions.push_back(ex);
  }
  ParameterMap params = l1.params;
  for (const auto& [k, value] : l2.params) params.emplace(k, value);
  const std::vector<Point> pts = effective.sample_points(params);
  std::vector<double> diffs(pts.size());
  for_each_index(pts.size(), exec, [&](std::size_t i) {
    const double a1 = implied_acceleration(l1, pts[i]);
    const double a2 = implied_acceleration(l2, pts[i]);
    const double d = std::fabs(a1 - a2) / (1.0 + std::fmax(std::fabs(a1), std::fabs(a2)));
    diffs[i] = std::isfinite(d) ? d : std::numeric_limits<double>::infinity();
  });
  EquivalenceReport report;
  report.tolerance = tol;
  report.samples_used = static_cast<int>(pts.size());
  report.max_rel_difference = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = diffs[i];
    if (d > report.max_rel_difference ||
        (d == report.max_rel_difference &&
         std::tie(pts[i].x, pts[i].v, pts[i].t) <
             std::tie(report.argmax.x, report.argmax.v, report.argmax.t))) {
      report.max_rel_difference = d;
      report.argmax = pts[i];
    }
  }
  report.equivalent = report.max_rel_difference <= tol;
  return report;
}

}  // namespace lagrangeforge
