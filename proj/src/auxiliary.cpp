#include "auxiliary.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <vector>

#include "lagrangeforge/error.hpp"

namespace lagrangeforge {

namespace {

constexpr double kTargetStep = 2e-3;

struct State {
  double w = 0.0;
  double wd = 0.0;
};

class AuxiliarySolution {
 public:
  AuxiliarySolution(Expr beta, Expr kappa, double t0, State s0, Interval range)
      : beta_(std::move(beta)), kappa_(std::move(kappa)), range_(range) {
    std::vector<double> ts_back;
    std::vector<State> back;
    // Backward sweep to range.lo, then forward sweep to range.hi.
    sweep(t0, s0, range.lo, &ts_back, &back);
    for (std::size_t i = ts_back.size(); i-- > 1;) {
      times_.push_back(ts_back[i]);
      states_.push_back(back[i]);
    }
    std::vector<double> ts_fwd;
    std::vector<State> fwd;
    sweep(t0, s0, range.hi, &ts_fwd, &fwd);
    times_.insert(times_.end(), ts_fwd.begin(), ts_fwd.end());
    states_.insert(states_.end(), fwd.begin(), fwd.end());
  }

  State at(double t) const {
    const double slack = 1e-12 * (1.0 + std::fabs(t));
    if (!(t >= range_.lo - slack && t <= range_.hi + slack)) {
      std::ostringstream msg;
      msg << "auxiliary solution evaluated at t=" << t << " outside [" << range_.lo << ", "
          << range_.hi << "]";
      throw Error(ErrorCode::kDomain, msg.str());
    }
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times_.begin());
    if (i == times_.size()) i = times_.size() - 1;
    if (i > 0 && std::fabs(times_[i - 1] - t) < std::fabs(times_[i] - t)) --i;
    if (times_[i] == t) return states_[i];
    return rk4_step(times_[i], states_[i], t - times_[i]);
  }

  double beta(double t) const { return eval(beta_, Binding(0.0, 0.0, t)); }
  double kappa(double t) const { return eval(kappa_, Binding(0.0, 0.0, t)); }
  const Expr& beta_expr() const { return beta_; }
  const Expr& kappa_expr() const { return kappa_; }

 private:
  State rhs(double t, const State& s) const {
    return {s.wd, beta(t) * s.wd + kappa(t) * s.w};
  }

  State rk4_step(double t, const State& s, double h) const {
    const State k1 = rhs(t, s);
    const State k2 = rhs(t + 0.5 * h, {s.w + 0.5 * h * k1.w, s.wd + 0.5 * h * k1.wd});
    const State k3 = rhs(t + 0.5 * h, {s.w + 0.5 * h * k2.w, s.wd + 0.5 * h * k2.wd});
    const State k4 = rhs(t + h, {s.w + h * k3.w, s.wd + h * k3.wd});
    return {s.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
            s.wd + h / 6.0 * (k1.wd + 2.0 * k2.wd + 2.0 * k3.wd + k4.wd)};
  }

  void sweep(double t0, State s, double t1, std::vector<double>* ts,
             std::vector<State>* out) const {
    const int n = std::max(1, static_cast<int>(std::ceil(std::fabs(t1 - t0) / kTargetStep)));
    const double h = (t1 - t0) / n;
    ts->push_back(t0);
    out->push_back(s);
    if (t1 == t0) return;
    for (int i = 0; i < n; ++i) {
      const double t = t0 + h * i;
      s = rk4_step(t, s, h);
      const double tn = i == n - 1 ? t1 : t0 + h * (i + 1);
      if (!(s.w > 0.0) || !std::isfinite(s.wd)) {
        std::ostringstream msg;
        msg << "auxiliary solution w(t) reaches zero near t=" << tn
            << "; the reciprocal Lagrangian is singular there";
        throw Error(ErrorCode::kZeroCrossing, msg.str());
      }
      ts->push_back(tn);
      out->push_back(s);
    }
  }

  Expr beta_, kappa_;
  Interval range_;
  std::vector<double> times_;
  std::vector<State> states_;
};

// w^(k) = p_k w + q_k w' with (p_{k+1}, q_{k+1}) = (p_k' + q_k kappa, p_k + q_k' + q_k beta).
class AuxiliaryDerivative final : public UnaryFunction,
                                  public std::enable_shared_from_this<AuxiliaryDerivative> {
 public:
  AuxiliaryDerivative(std::shared_ptr<const AuxiliarySolution> sol, int order)
      : sol_(std::move(sol)), order_(order) {
    Expr p = constant(1.0);
    Expr q = constant(0.0);
    for (int k = 0; k < order + 2; ++k) {
      coeffs_.emplace_back(p, q);
      const Expr pn = differentiate(p, Variable::kT) + q * sol_->kappa_expr();
      const Expr qn = p + differentiate(q, Variable::kT) + q * sol_->beta_expr();
      p = pn;
      q = qn;
    }
    coeffs_.emplace_back(p, q);
  }

  std::string name() const override {
    return order_ == 0 ? "w" : "w" + std::string(static_cast<std::size_t>(order_), '\'');
  }

  Derivs3 evaluate(double u) const override {
    const State s = sol_->at(u);
    const Binding at(0.0, 0.0, u);
    auto combine = [&](int k) {
      const auto& [p, q] = coeffs_[static_cast<std::size_t>(k)];
      return eval(p, at) * s.w + eval(q, at) * s.wd;
    };
    return {combine(order_), combine(order_ + 1), combine(order_ + 2)};
  }

  std::shared_ptr<const UnaryFunction> derivative() const override {
    std::call_once(next_once_, [this] {
      next_ = std::make_shared<const AuxiliaryDerivative>(sol_, order_ + 1);
    });
    return next_;
  }

 private:
  std::shared_ptr<const AuxiliarySolution> sol_;
  int order_;
  std::vector<std::pair<Expr, Expr>> coeffs_;
  mutable std::once_flag next_once_;
  mutable std::shared_ptr<const UnaryFunction> next_;
};

}  // namespace

AuxiliaryPair solve_auxiliary(const Expr& beta, const Expr& kappa, double t0, double w0,
                              double wd0, Interval range) {
  if (beta.dependencies() & ~variable_bit(Variable::kT) ||
      kappa.dependencies() & ~variable_bit(Variable::kT) || beta.has_parameters() ||
      kappa.has_parameters()) {
    throw Error(ErrorCode::kInadmissible,
                "auxiliary equation coefficients must be functions of t only");
  }
  range.lo = std::fmin(range.lo, t0);
  range.hi = std::fmax(range.hi, t0);
  auto sol = std::make_shared<const AuxiliarySolution>(beta, kappa, t0, State{w0, wd0}, range);
  auto w = std::make_shared<const AuxiliaryDerivative>(sol, 0);
  return {w, w->derivative()};
}

}  // namespace lagrangeforge
