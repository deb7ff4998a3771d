#include "lagrangeforge/eval.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

#include "lagrangeforge/error.hpp"

namespace lagrangeforge {

double Binding::param(std::string_view name) const {
  for (const auto& [key, value] : params) {
    if (key == name) return value;
  }
  throw Error(ErrorCode::kUnknownIdentifier, "unbound parameter '" + std::string(name) + "'");
}

namespace {

struct AnchorKey {
  std::uint64_t id;
  double other0;
  double other1;
  bool operator==(const AnchorKey& o) const {
    return id == o.id && other0 == o.other0 && other1 == o.other1;
  }
};

struct AnchorKeyHash {
  std::size_t operator()(const AnchorKey& k) const {
    std::size_t h = std::hash<std::uint64_t>{}(k.id);
    h ^= std::hash<double>{}(k.other0) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<double>{}(k.other1) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

template <class T>
using AnchorTable = std::unordered_map<AnchorKey, std::map<double, T>, AnchorKeyHash>;

struct AntiderivCache {
  AnchorTable<double> scalar;
  AnchorTable<Jet2> jet;
  int depth = 0;
};

thread_local AntiderivCache t_cache;

// Clears the cache when entering a top-level evaluation.
class CacheScope {
 public:
  CacheScope() {
    if (t_cache.depth++ == 0) {
      t_cache.scalar.clear();
      t_cache.jet.clear();
    }
  }
  ~CacheScope() { --t_cache.depth; }
  CacheScope(const CacheScope&) = delete;
  CacheScope& operator=(const CacheScope&) = delete;
};

[[noreturn]] void domain_error(const std::string& what) {
  throw Error(ErrorCode::kDomain, what);
}

bool is_integer(double c) { return c == std::nearbyint(c); }

class Evaluator {
 public:
  Evaluator(const Binding& b, const QuadratureConfig& cfg) : b_(b), cfg_(cfg) {}

  double value(const Expr& e) {
    switch (e.op()) {
      case Op::kConst: return e.constant_value();
      case Op::kVar: return e.is_parameter() ? b_.param(e.name()) : b_.point[e.variable()];
      case Op::kAdd: return value(e.child(0)) + value(e.child(1));
      case Op::kSub: return value(e.child(0)) - value(e.child(1));
      case Op::kMul: return value(e.child(0)) * value(e.child(1));
      case Op::kDiv: {
        const double num = value(e.child(0));
        const double den = value(e.child(1));
        if (den == 0.0) domain_error("division by zero in " + format(e));
        return num / den;
      }
      case Op::kNeg: return -value(e.child(0));
      case Op::kPow: return power_value(value(e.child(0)), value(e.child(1)), e);
      case Op::kExp: return std::exp(value(e.child(0)));
      case Op::kLn: {
        const double u = value(e.child(0));
        if (!(u > 0.0)) domain_error("ln of non-positive argument in " + format(e));
        return std::log(u);
      }
      case Op::kAbs: return std::fabs(value(e.child(0)));
      case Op::kSqrt: {
        const double u = value(e.child(0));
        if (u < 0.0) domain_error("sqrt of negative argument in " + format(e));
        return std::sqrt(u);
      }
      case Op::kSin: return std::sin(value(e.child(0)));
      case Op::kCos: return std::cos(value(e.child(0)));
      case Op::kAntideriv: return antideriv_value(e);
      case Op::kCall: return e.function()->evaluate(value(e.child(0))).value;
    }
    return 0.0;
  }

  Jet2 jet(const Expr& e) {
    if (e.dependencies() == 0) return Jet2::constant(value(e));
    switch (e.op()) {
      case Op::kConst: return Jet2::constant(e.constant_value());
      case Op::kVar: return Jet2::variable(e.variable(), b_.point[e.variable()]);
      case Op::kAdd: return jet(e.child(0)) + jet(e.child(1));
      case Op::kSub: return jet(e.child(0)) - jet(e.child(1));
      case Op::kMul: return jet(e.child(0)) * jet(e.child(1));
      case Op::kDiv: {
        const Jet2 num = jet(e.child(0));
        const Jet2 den = jet(e.child(1));
        if (den.value == 0.0) domain_error("division by zero in " + format(e));
        const double inv = 1.0 / den.value;
        return num * chain(den, inv, -inv * inv, 2.0 * inv * inv * inv);
      }
      case Op::kNeg: return -1.0 * jet(e.child(0));
      case Op::kPow: return power_jet(e);
      case Op::kExp: {
        const Jet2 u = jet(e.child(0));
        const double f = std::exp(u.value);
        return chain(u, f, f, f);
      }
      case Op::kLn: {
        const Jet2 u = jet(e.child(0));
        if (!(u.value > 0.0)) domain_error("ln of non-positive argument in " + format(e));
        const double inv = 1.0 / u.value;
        return chain(u, std::log(u.value), inv, -inv * inv);
      }
      case Op::kAbs: {
        const Jet2 u = jet(e.child(0));
        if (u.value == 0.0) {
          throw Error(ErrorCode::kNonDifferentiable, "abs is not differentiable at 0 in " +
                                                         format(e));
        }
        const double s = u.value > 0.0 ? 1.0 : -1.0;
        return chain(u, std::fabs(u.value), s, 0.0);
      }
      case Op::kSqrt: {
        const Jet2 u = jet(e.child(0));
        if (!(u.value > 0.0)) domain_error("sqrt not differentiable at " + format(e));
        const double r = std::sqrt(u.value);
        return chain(u, r, 0.5 / r, -0.25 / (r * u.value));
      }
      case Op::kSin: {
        const Jet2 u = jet(e.child(0));
        const double s = std::sin(u.value);
        return chain(u, s, std::cos(u.value), -s);
      }
      case Op::kCos: {
        const Jet2 u = jet(e.child(0));
        const double c = std::cos(u.value);
        return chain(u, c, -std::sin(u.value), -c);
      }
      case Op::kAntideriv: return antideriv_jet(e);
      case Op::kCall: {
        const Jet2 u = jet(e.child(0));
        const Derivs3 f = e.function()->evaluate(u.value);
        return chain(u, f.value, f.d1, f.d2);
      }
    }
    return Jet2{};
  }

  Binding& binding() { return b_; }

 private:
  static double power_value(double u, double c, const Expr& e) {
    if (u < 0.0 && !is_integer(c)) domain_error("non-integer power of negative base in " + format(e));
    if (u == 0.0 && (c < 0.0 || !is_integer(c))) {
      domain_error("power of zero base with exponent " + std::to_string(c) + " in " + format(e));
    }
    return std::pow(u, c);
  }

  Jet2 power_jet(const Expr& e) {
    const Expr& exponent = e.child(1);
    if (exponent.dependencies() == 0) {
      const double c = value(exponent);
      const Jet2 u = jet(e.child(0));
      const double f = power_value(u.value, c, e);
      const double f1 = c == 0.0 ? 0.0 : c * std::pow(u.value, c - 1.0);
      const double f2 = (c == 0.0 || c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(u.value, c - 2.0);
      return chain(u, f, f1, f2);
    }
    const Jet2 u = jet(e.child(0));
    if (!(u.value > 0.0)) domain_error("variable power of non-positive base in " + format(e));
    const double inv = 1.0 / u.value;
    const Jet2 log_u = chain(u, std::log(u.value), inv, -inv * inv);
    const Jet2 w = jet(exponent) * log_u;
    const double f = std::exp(w.value);
    return chain(w, f, f, f);
  }

  AnchorKey key_for(const Expr& e) const {
    const Variable var = e.variable();
    const std::uint8_t deps = e.integrand().dependencies();
    double others[2] = {0.0, 0.0};
    std::size_t k = 0;
    for (Variable o : kAllVariables) {
      if (o == var) continue;
      others[k++] = (deps & variable_bit(o)) ? b_.point[o] : 0.0;
    }
    return {e.id(), others[0], others[1]};
  }

  // Nearest stored anchor to `upper`, or the base point when that is closer.
  template <class T>
  static std::pair<double, T> start_point(const std::map<double, T>& anchors, double base,
                                          double upper) {
    std::pair<double, T> best{base, T{}};
    double best_dist = std::fabs(upper - base);
    auto consider = [&](typename std::map<double, T>::const_iterator it) {
      const double dist = std::fabs(upper - it->first);
      if (dist < best_dist) {
        best_dist = dist;
        best = {it->first, it->second};
      }
    };
    auto it = anchors.lower_bound(upper);
    if (it != anchors.end()) consider(it);
    if (it != anchors.begin()) consider(std::prev(it));
    return best;
  }

  template <class T>
  void store_anchor(std::map<double, T>& anchors, double upper, const T& result) const {
    const double spacing = cfg_.cache_resolution * (1.0 + std::fabs(upper));
    auto it = anchors.lower_bound(upper - spacing);
    if (it != anchors.end() && std::fabs(it->first - upper) <= spacing) return;
    anchors.emplace(upper, result);
  }

  class PinVariable {
   public:
    PinVariable(Binding& b, Variable var) : b_(b), var_(var), saved_(b.point[var]) {}
    ~PinVariable() { b_.point[var_] = saved_; }
    PinVariable(const PinVariable&) = delete;
    PinVariable& operator=(const PinVariable&) = delete;

   private:
    Binding& b_;
    Variable var_;
    double saved_;
  };

  double antideriv_value(const Expr& e) {
    const Variable var = e.variable();
    const double upper = b_.point[var];
    const AnchorKey key = key_for(e);
    const auto [start, partial] = start_point(t_cache.scalar[key], e.base(), upper);
    double result;
    {
      PinVariable pin(b_, var);
      result = partial + integrate_adaptive<double>(
                             [&](double xi) {
                               b_.point[var] = xi;
                               return value(e.integrand());
                             },
                             start, upper, cfg_);
    }
    store_anchor(t_cache.scalar[key], upper, result);
    return result;
  }

  Jet2 antideriv_jet(const Expr& e) {
    const Variable var = e.variable();
    const std::size_t vi = static_cast<std::size_t>(var);
    const Expr& h = e.integrand();
    const Jet2 at_upper = jet(h);
    Jet2 r;
    const std::uint8_t others = h.dependencies() & static_cast<std::uint8_t>(~variable_bit(var));
    if (others == 0) {
      r.value = antideriv_value(e);
    } else {
      // Differentiation under the integral sign for the non-integration directions.
      const double upper = b_.point[var];
      const AnchorKey key = key_for(e);
      const auto [start, partial] = start_point(t_cache.jet[key], e.base(), upper);
      {
        PinVariable pin(b_, var);
        r = partial + integrate_adaptive<Jet2>(
                          [&](double xi) {
                            b_.point[var] = xi;
                            return jet(h);
                          },
                          start, upper, cfg_);
      }
      store_anchor(t_cache.jet[key], upper, r);
    }
    r.grad[vi] = at_upper.value;
    for (std::size_t j = 0; j < 3; ++j) r.hess[Jet2::index(vi, j)] = at_upper.grad[j];
    return r;
  }

  Binding b_;
  const QuadratureConfig& cfg_;
};

void check_finite(double value, const Expr& e) {
  if (!std::isfinite(value)) domain_error("non-finite value of " + format(e));
}

}  // namespace

double eval(const Expr& e, const Binding& b, const QuadratureConfig& cfg) {
  CacheScope scope;
  const double r = Evaluator(b, cfg).value(e);
  check_finite(r, e);
  return r;
}

Jet2 eval_jet2(const Expr& e, const Binding& b, const QuadratureConfig& cfg) {
  CacheScope scope;
  const Jet2 r = Evaluator(b, cfg).jet(e);
  check_finite(norm_inf(r), e);
  return r;
}

double definite_integral(const Expr& e, Variable var, double lo, double hi,
                         const QuadratureConfig& cfg, const Binding& b) {
  CacheScope scope;
  Evaluator ev(b, cfg);
  const double r = integrate_adaptive<double>(
      [&](double xi) {
        ev.binding().point[var] = xi;
        return ev.value(e);
      },
      lo, hi, cfg);
  check_finite(r, e);
  return r;
}

}  // namespace lagrangeforge
