#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lagrangeforge {

// The three coordinates every Lagrangian lives on: position, velocity, time.
enum class Variable : std::uint8_t { kX = 0, kV = 1, kT = 2 };

inline constexpr std::array<Variable, 3> kAllVariables = {Variable::kX, Variable::kV,
                                                          Variable::kT};

std::string_view variable_name(Variable var);
std::optional<Variable> variable_from_name(std::string_view name);

constexpr std::uint8_t variable_bit(Variable var) {
  return static_cast<std::uint8_t>(1u << static_cast<unsigned>(var));
}

enum class Op : std::uint8_t {
  kConst,
  kVar,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPow,
  kExp,
  kLn,
  kAbs,
  kSqrt,
  kSin,
  kCos,
  kAntideriv,
  kCall,
};

// Value and first two derivatives of a scalar function of one argument.
struct Derivs3 {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// A numerically defined function of one variable (e.g. the dense solution of an
// auxiliary ODE) that can sit inside an expression tree via a Call node.
class UnaryFunction {
 public:
  virtual ~UnaryFunction() = default;
  virtual std::string name() const = 0;
  virtual Derivs3 evaluate(double u) const = 0;
  // Throws Error(kUnsupported) when no further derivative is available.
  virtual std::shared_ptr<const UnaryFunction> derivative() const = 0;
};

struct Node;

// Immutable expression handle. Copies share structure; all factories below
// apply local simplification so that equal inputs give structurally equal trees.
class Expr {
 public:
  Expr();
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  Op op() const;
  double constant_value() const;
  // Var: the identifier; Call: the function name.
  const std::string& name() const;
  // Var over x/v/t, or the integration variable of an Antideriv.
  Variable variable() const;
  bool is_parameter() const;
  const Expr& child(std::size_t i) const;
  std::size_t arity() const;
  // Antideriv accessors.
  const Expr& integrand() const { return child(0); }
  double base() const;
  const std::shared_ptr<const UnaryFunction>& function() const;

  // Bitmask over x, v, t of variables the value depends on.
  std::uint8_t dependencies() const;
  bool depends_on(Variable var) const { return (dependencies() & variable_bit(var)) != 0; }
  bool has_parameters() const;
  int antideriv_depth() const;
  std::uint64_t id() const;

  bool is_constant() const { return op() == Op::kConst; }
  bool is_constant(double c) const { return is_constant() && constant_value() == c; }

  const Node* node() const { return node_.get(); }

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op = Op::kConst;
  double value = 0.0;  // constant value, or Antideriv base point
  std::string name;
  Variable var = Variable::kX;
  bool parameter = false;
  std::array<Expr, 2> children;
  std::size_t arity = 0;
  std::shared_ptr<const UnaryFunction> function;
  std::uint8_t deps = 0;
  bool has_params = false;
  int depth = 0;
  std::uint64_t id = 0;
};

inline constexpr int kMaxAntiderivDepth = 2;

// Factories (smart constructors).
Expr constant(double c);
Expr var(Variable v);
// Named variable: x, v or t map to coordinates, anything else is a parameter.
Expr var(std::string_view name);
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr div(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr pow(const Expr& base, double exponent);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr abs(const Expr& a);
Expr sqrt(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
// Integral of `integrand` over `var` from `base` up to the current value of `var`.
// Other variables appearing in the integrand are held fixed.
Expr antideriv(const Expr& integrand, Variable var, double base = 0.0);
Expr call(std::shared_ptr<const UnaryFunction> fn, const Expr& arg);

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }
inline Expr operator+(const Expr& a, double b) { return add(a, constant(b)); }
inline Expr operator+(double a, const Expr& b) { return add(constant(a), b); }
inline Expr operator-(const Expr& a, double b) { return sub(a, constant(b)); }
inline Expr operator-(double a, const Expr& b) { return sub(constant(a), b); }
inline Expr operator*(const Expr& a, double b) { return mul(a, constant(b)); }
inline Expr operator*(double a, const Expr& b) { return mul(constant(a), b); }
inline Expr operator/(const Expr& a, double b) { return div(a, constant(b)); }
inline Expr operator/(double a, const Expr& b) { return div(constant(a), b); }

bool structurally_equal(const Expr& a, const Expr& b);

// Rebuilds the tree bottom-up through the simplifying factories.
Expr canonical(const Expr& e);

// Replaces every free occurrence of the named variable. Substituting the
// integration variable of an Antideriv is rejected.
Expr substitute(const Expr& e, std::string_view name, const Expr& replacement);
Expr substitute(const Expr& e, Variable var, const Expr& replacement);
Expr substitute_parameters(const Expr& e, const std::map<std::string, double>& values);

std::set<std::string> parameter_names(const Expr& e);

struct DiffNotes {
  // Set when d|u| = u/|u| was emitted; the result is invalid where u = 0.
  bool abs_sign_used = false;
};

Expr differentiate(const Expr& e, Variable var, DiffNotes* notes = nullptr);

// Canonical text; parse_expression(format(e)) reproduces canonical(e).
std::string format(const Expr& e);

using FunctionRegistry = std::map<std::string, std::shared_ptr<const UnaryFunction>, std::less<>>;

// Grammar: numbers, identifiers, + - * / ^, unary minus, parentheses and calls
// exp ln abs sqrt sin cos, plus antideriv(expr, x|v|t, number). ^ is
// right-associative and binds tighter than unary minus. Identifiers other than
// x, v, t must be listed in `params` (or in `functions` when called).
Expr parse_expression(std::string_view text, const std::set<std::string, std::less<>>& params = {},
                      const FunctionRegistry* functions = nullptr);

}  // namespace lagrangeforge
