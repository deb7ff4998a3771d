#pragma once

#include <vector>

#include "lagrangeforge/lagrangian.hpp"

namespace lagrangeforge {

enum class Method { kRk4Fixed, kRk45Adaptive };

struct IntegratorConfig {
  Method method = Method::kRk45Adaptive;
  double step = 1e-2;  // fixed step for RK4, initial step for RK45
  double rel_tol = 1e-11;
  double abs_tol = 1e-12;
  int max_steps = 2'000'000;
  double overflow_guard = 1e12;

  void validate() const;
  // The per-step error bound the adaptive method enforces at a state of size `scale`.
  double tolerance(double scale) const { return abs_tol + rel_tol * scale; }
};

struct SolverStats {
  int steps = 0;
  int rejected = 0;
  double max_error_estimate = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> v;
  std::vector<double> a;  // right-hand side at each node
  ParameterMap params;
  SolverStats stats;

  std::size_t size() const { return times.size(); }
  Point node(std::size_t i) const { return {x[i], v[i], times[i]}; }
  // Cubic Hermite interpolation of x (with v) and v (with a); exact at nodes.
  Point state_at(double t) const;
};

// Integrates x'' = rhs from (x0, v0) at t0 up to t1 > t0.
Trajectory integrate_ode(const OdeSpec& ode, double x0, double v0, double t0, double t1,
                         const IntegratorConfig& cfg = {});

struct MonitorSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> rates;  // dq/dt by the chain rule with the recorded accelerations
  double max_drift = 0.0;     // max |q - q(t0)|
  double max_rate = 0.0;      // max |dq/dt|
};

MonitorSeries monitor_quantity(const Trajectory& traj, const Expr& q,
                               const ParameterMap& extra_params = {});

struct EquivalenceReport {
  double max_rel_difference = 0.0;
  Point argmax;
  int samples_used = 0;
  double tolerance = 0.0;
  bool equivalent = false;
};

// Compares implied-acceleration fields: |a1 - a2| / (1 + max(|a1|, |a2|)).
EquivalenceReport equivalence_check(const Lagrangian& l1, const Lagrangian& l2,
                                    const DomainBox& box, double tol = 1e-8,
                                    Execution exec = Execution::kParallel);

}  // namespace lagrangeforge
