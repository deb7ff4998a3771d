#include "lagrangeforge/expr.hpp"

#include <atomic>
#include <charconv>
#include <cmath>

#include "lagrangeforge/error.hpp"

namespace lagrangeforge {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax: return "syntax";
    case ErrorCode::kUnknownIdentifier: return "unknown-identifier";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kQuadratureFailure: return "quadrature-failure";
    case ErrorCode::kNonDifferentiable: return "non-differentiable";
    case ErrorCode::kDegenerateLagrangian: return "degenerate-lagrangian";
    case ErrorCode::kInadmissible: return "inadmissible";
    case ErrorCode::kBadExponent: return "bad-exponent";
    case ErrorCode::kZeroCrossing: return "zero-crossing";
    case ErrorCode::kConstraintViolated: return "constraint-violated";
    case ErrorCode::kBracket: return "bracket";
    case ErrorCode::kNonMonotone: return "non-monotone";
    case ErrorCode::kNotInvariant: return "not-invariant";
    case ErrorCode::kStepUnderflow: return "step-underflow";
    case ErrorCode::kOverflow: return "overflow";
    case ErrorCode::kEmptyDomain: return "empty-domain";
    case ErrorCode::kVerificationFailed: return "verification-failed";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kUnknownPreset: return "unknown-preset";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

std::string_view variable_name(Variable var) {
  switch (var) {
    case Variable::kX: return "x";
    case Variable::kV: return "v";
    case Variable::kT: return "t";
  }
  return "?";
}

std::optional<Variable> variable_from_name(std::string_view name) {
  if (name == "x") return Variable::kX;
  if (name == "v") return Variable::kV;
  if (name == "t") return Variable::kT;
  return std::nullopt;
}

namespace {

std::atomic<std::uint64_t> g_next_id{1};

const std::string kEmptyName;

std::shared_ptr<Node> make_node(Op op) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

Expr finish_unary(Op op, const Expr& a) {
  auto n = make_node(op);
  n->children[0] = a;
  n->arity = 1;
  n->deps = a.dependencies();
  n->has_params = a.has_parameters();
  n->depth = a.antideriv_depth();
  return Expr(std::move(n));
}

Expr finish_binary(Op op, const Expr& a, const Expr& b) {
  auto n = make_node(op);
  n->children[0] = a;
  n->children[1] = b;
  n->arity = 2;
  n->deps = a.dependencies() | b.dependencies();
  n->has_params = a.has_parameters() || b.has_parameters();
  n->depth = std::max(a.antideriv_depth(), b.antideriv_depth());
  return Expr(std::move(n));
}

bool is_integer(double c) { return std::isfinite(c) && c == std::nearbyint(c); }

}  // namespace

Expr::Expr() = default;

Op Expr::op() const { return node_ ? node_->op : Op::kConst; }
double Expr::constant_value() const { return node_ ? node_->value : 0.0; }
const std::string& Expr::name() const { return node_ ? node_->name : kEmptyName; }
Variable Expr::variable() const { return node_ ? node_->var : Variable::kX; }
bool Expr::is_parameter() const { return node_ && node_->parameter; }
const Expr& Expr::child(std::size_t i) const { return node_->children.at(i); }
std::size_t Expr::arity() const { return node_ ? node_->arity : 0; }
double Expr::base() const { return node_ ? node_->value : 0.0; }
const std::shared_ptr<const UnaryFunction>& Expr::function() const { return node_->function; }
std::uint8_t Expr::dependencies() const { return node_ ? node_->deps : 0; }
bool Expr::has_parameters() const { return node_ && node_->has_params; }
int Expr::antideriv_depth() const { return node_ ? node_->depth : 0; }
std::uint64_t Expr::id() const { return node_ ? node_->id : 0; }

Expr constant(double c) {
  if (!std::isfinite(c)) {
    throw Error(ErrorCode::kDomain, "non-finite constant in expression");
  }
  auto n = make_node(Op::kConst);
  n->value = c == 0.0 ? 0.0 : c;  // no negative zero
  return Expr(std::move(n));
}

Expr var(Variable v) {
  auto n = make_node(Op::kVar);
  n->var = v;
  n->name = std::string(variable_name(v));
  n->deps = variable_bit(v);
  return Expr(std::move(n));
}

Expr var(std::string_view name) {
  if (auto v = variable_from_name(name)) return var(*v);
  auto n = make_node(Op::kVar);
  n->name = std::string(name);
  n->parameter = true;
  n->has_params = true;
  return Expr(std::move(n));
}

Expr add(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  if (a.is_constant() && b.is_constant()) return constant(a.constant_value() + b.constant_value());
  return finish_binary(Op::kAdd, a, b);
}

Expr sub(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return neg(b);
  if (a.is_constant() && b.is_constant()) return constant(a.constant_value() - b.constant_value());
  return finish_binary(Op::kSub, a, b);
}

Expr mul(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant() && b.is_constant()) return constant(a.constant_value() * b.constant_value());
  if (a.is_constant(-1.0)) return neg(b);
  if (b.is_constant(-1.0)) return neg(a);
  return finish_binary(Op::kMul, a, b);
}

Expr div(const Expr& a, const Expr& b) {
  if (b.is_constant(1.0)) return a;
  if (!b.is_constant(0.0)) {
    if (a.is_constant(0.0)) return constant(0.0);
    if (a.is_constant() && b.is_constant()) {
      return constant(a.constant_value() / b.constant_value());
    }
  }
  return finish_binary(Op::kDiv, a, b);
}

Expr neg(const Expr& a) {
  if (a.is_constant()) return constant(-a.constant_value());
  if (a.op() == Op::kNeg) return a.child(0);
  return finish_unary(Op::kNeg, a);
}

Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.is_constant(0.0)) return constant(1.0);
  if (exponent.is_constant(1.0)) return base;
  if (base.is_constant(1.0)) return constant(1.0);
  if (base.is_constant() && exponent.is_constant()) {
    const double b = base.constant_value();
    const double e = exponent.constant_value();
    if ((b > 0.0 || (is_integer(e) && b != 0.0))) {
      const double r = std::pow(b, e);
      if (std::isfinite(r)) return constant(r);
    }
  }
  return finish_binary(Op::kPow, base, exponent);
}

Expr pow(const Expr& base, double exponent) { return pow(base, constant(exponent)); }

Expr exp(const Expr& a) {
  if (a.is_constant(0.0)) return constant(1.0);
  return finish_unary(Op::kExp, a);
}

Expr ln(const Expr& a) {
  if (a.is_constant(1.0)) return constant(0.0);
  return finish_unary(Op::kLn, a);
}

Expr abs(const Expr& a) {
  if (a.is_constant()) return constant(std::fabs(a.constant_value()));
  if (a.op() == Op::kAbs) return a;
  return finish_unary(Op::kAbs, a);
}

Expr sqrt(const Expr& a) {
  if (a.is_constant(0.0) || a.is_constant(1.0)) return a;
  return finish_unary(Op::kSqrt, a);
}

Expr sin(const Expr& a) {
  if (a.is_constant(0.0)) return constant(0.0);
  return finish_unary(Op::kSin, a);
}

Expr cos(const Expr& a) {
  if (a.is_constant(0.0)) return constant(1.0);
  return finish_unary(Op::kCos, a);
}

Expr antideriv(const Expr& integrand, Variable v, double base) {
  if (!std::isfinite(base)) throw Error(ErrorCode::kDomain, "non-finite antiderivative base");
  if (integrand.is_constant(0.0)) return constant(0.0);
  // An integrand free of the integration variable integrates in closed form.
  if (!integrand.depends_on(v)) return mul(integrand, sub(var(v), constant(base)));
  if (integrand.antideriv_depth() + 1 > kMaxAntiderivDepth) {
    throw Error(ErrorCode::kUnsupported, "antiderivative nesting deeper than " +
                                             std::to_string(kMaxAntiderivDepth));
  }
  auto n = make_node(Op::kAntideriv);
  n->children[0] = integrand;
  n->arity = 1;
  n->var = v;
  n->value = base == 0.0 ? 0.0 : base;
  n->deps = integrand.dependencies();
  n->has_params = integrand.has_parameters();
  n->depth = integrand.antideriv_depth() + 1;
  return Expr(std::move(n));
}

Expr call(std::shared_ptr<const UnaryFunction> fn, const Expr& arg) {
  auto n = make_node(Op::kCall);
  n->name = fn->name();
  n->function = std::move(fn);
  n->children[0] = arg;
  n->arity = 1;
  n->deps = arg.dependencies();
  n->has_params = arg.has_parameters();
  n->depth = arg.antideriv_depth();
  return Expr(std::move(n));
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::kConst: return a.constant_value() == b.constant_value();
    case Op::kVar: return a.name() == b.name();
    case Op::kAntideriv:
      return a.variable() == b.variable() && a.base() == b.base() &&
             structurally_equal(a.integrand(), b.integrand());
    case Op::kCall:
      if (a.function() != b.function()) return false;
      break;
    default: break;
  }
  if (a.arity() != b.arity()) return false;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    if (!structurally_equal(a.child(i), b.child(i))) return false;
  }
  return true;
}

namespace {

Expr rebuild(const Expr& e, const std::array<Expr, 2>& kids) {
  switch (e.op()) {
    case Op::kConst: return constant(e.constant_value());
    case Op::kVar: return var(e.name());
    case Op::kAdd: return add(kids[0], kids[1]);
    case Op::kSub: return sub(kids[0], kids[1]);
    case Op::kMul: return mul(kids[0], kids[1]);
    case Op::kDiv: return div(kids[0], kids[1]);
    case Op::kNeg: return neg(kids[0]);
    case Op::kPow: return pow(kids[0], kids[1]);
    case Op::kExp: return exp(kids[0]);
    case Op::kLn: return ln(kids[0]);
    case Op::kAbs: return abs(kids[0]);
    case Op::kSqrt: return sqrt(kids[0]);
    case Op::kSin: return sin(kids[0]);
    case Op::kCos: return cos(kids[0]);
    case Op::kAntideriv: return antideriv(kids[0], e.variable(), e.base());
    case Op::kCall: return call(e.function(), kids[0]);
  }
  return e;
}

template <class Leaf>
Expr transform(const Expr& e, const Leaf& leaf) {
  if (auto replaced = leaf(e)) return *replaced;
  std::array<Expr, 2> kids;
  bool changed = false;
  for (std::size_t i = 0; i < e.arity(); ++i) {
    kids[i] = transform(e.child(i), leaf);
    changed = changed || kids[i].node() != e.child(i).node();
  }
  if (!changed && e.op() != Op::kConst && e.op() != Op::kVar) return e;
  return rebuild(e, kids);
}

}  // namespace

Expr canonical(const Expr& e) {
  std::array<Expr, 2> kids;
  for (std::size_t i = 0; i < e.arity(); ++i) kids[i] = canonical(e.child(i));
  return rebuild(e, kids);
}

Expr substitute(const Expr& e, std::string_view name, const Expr& replacement) {
  return transform(e, [&](const Expr& node) -> std::optional<Expr> {
    if (node.op() == Op::kVar && node.name() == name) return replacement;
    if (node.op() == Op::kAntideriv && variable_name(node.variable()) == name) {
      throw Error(ErrorCode::kUnsupported,
                  "cannot substitute the integration variable of an antiderivative");
    }
    if (node.op() == Op::kVar || node.op() == Op::kConst) return node;
    return std::nullopt;
  });
}

Expr substitute(const Expr& e, Variable v, const Expr& replacement) {
  if (!e.depends_on(v)) return e;
  return substitute(e, variable_name(v), replacement);
}

Expr substitute_parameters(const Expr& e, const std::map<std::string, double>& values) {
  if (!e.has_parameters()) return e;
  return transform(e, [&](const Expr& node) -> std::optional<Expr> {
    if (node.op() == Op::kVar && node.is_parameter()) {
      auto it = values.find(node.name());
      if (it != values.end()) return constant(it->second);
      return node;
    }
    if (node.op() == Op::kConst || node.op() == Op::kVar) return node;
    return std::nullopt;
  });
}

std::set<std::string> parameter_names(const Expr& e) {
  std::set<std::string> out;
  std::function<void(const Expr&)> walk = [&](const Expr& n) {
    if (!n.has_parameters()) return;
    if (n.op() == Op::kVar) out.insert(n.name());
    for (std::size_t i = 0; i < n.arity(); ++i) walk(n.child(i));
  };
  walk(e);
  return out;
}

Expr differentiate(const Expr& e, Variable wrt, DiffNotes* notes) {
  if (!e.depends_on(wrt)) return constant(0.0);
  auto d = [&](const Expr& u) { return differentiate(u, wrt, notes); };
  switch (e.op()) {
    case Op::kConst: return constant(0.0);
    case Op::kVar: return constant(e.variable() == wrt && !e.is_parameter() ? 1.0 : 0.0);
    case Op::kAdd: return add(d(e.child(0)), d(e.child(1)));
    case Op::kSub: return sub(d(e.child(0)), d(e.child(1)));
    case Op::kMul: {
      const Expr& u = e.child(0);
      const Expr& w = e.child(1);
      return add(mul(d(u), w), mul(u, d(w)));
    }
    case Op::kDiv: {
      const Expr& u = e.child(0);
      const Expr& w = e.child(1);
      if (!w.depends_on(wrt)) return div(d(u), w);
      return div(sub(mul(d(u), w), mul(u, d(w))), pow(w, 2.0));
    }
    case Op::kNeg: return neg(d(e.child(0)));
    case Op::kPow: {
      const Expr& u = e.child(0);
      const Expr& w = e.child(1);
      if (!w.depends_on(wrt)) {
        return mul(mul(w, pow(u, sub(w, constant(1.0)))), d(u));
      }
      return mul(e, add(mul(d(w), ln(u)), div(mul(w, d(u)), u)));
    }
    case Op::kExp: return mul(e, d(e.child(0)));
    case Op::kLn: return div(d(e.child(0)), e.child(0));
    case Op::kAbs:
      if (notes) notes->abs_sign_used = true;
      return mul(div(e.child(0), e), d(e.child(0)));
    case Op::kSqrt: return div(d(e.child(0)), mul(constant(2.0), e));
    case Op::kSin: return mul(cos(e.child(0)), d(e.child(0)));
    case Op::kCos: return neg(mul(sin(e.child(0)), d(e.child(0))));
    case Op::kAntideriv:
      if (e.variable() == wrt) return e.integrand();
      return antideriv(d(e.integrand()), e.variable(), e.base());
    case Op::kCall:
      return mul(call(e.function()->derivative(), e.child(0)), d(e.child(0)));
  }
  return constant(0.0);
}

namespace {

std::string format_number(double c) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), c);
  return std::string(buf, res.ptr);
}

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::kAdd:
    case Op::kSub: return 1;
    case Op::kMul:
    case Op::kDiv: return 2;
    case Op::kNeg: return 3;
    case Op::kPow: return 4;
    case Op::kConst: return e.constant_value() < 0.0 ? 3 : 5;
    default: return 5;
  }
}

void emit(const Expr& e, std::string& out);

// Negations (and negative literals) are parenthesized whenever they are an
// operand, so the printed text never relies on unary-minus placement rules.
void emit_operand(const Expr& e, int min_prec, std::string& out) {
  const int p = precedence(e);
  if (p < min_prec || p == 3) {
    out += '(';
    emit(e, out);
    out += ')';
  } else {
    emit(e, out);
  }
}

std::string_view function_name(Op op) {
  switch (op) {
    case Op::kExp: return "exp";
    case Op::kLn: return "ln";
    case Op::kAbs: return "abs";
    case Op::kSqrt: return "sqrt";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    default: return "";
  }
}

void emit(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::kConst: out += format_number(e.constant_value()); return;
    case Op::kVar: out += e.name(); return;
    case Op::kAdd:
    case Op::kSub:
      emit_operand(e.child(0), 1, out);
      out += e.op() == Op::kAdd ? " + " : " - ";
      emit_operand(e.child(1), 2, out);
      return;
    case Op::kMul:
    case Op::kDiv:
      emit_operand(e.child(0), 2, out);
      out += e.op() == Op::kMul ? "*" : "/";
      emit_operand(e.child(1), 4, out);
      return;
    case Op::kNeg:
      out += '-';
      emit_operand(e.child(0), 4, out);
      return;
    case Op::kPow:
      emit_operand(e.child(0), 5, out);
      out += '^';
      emit_operand(e.child(1), 4, out);
      return;
    case Op::kAntideriv:
      out += "antideriv(";
      emit(e.integrand(), out);
      out += ", ";
      out += variable_name(e.variable());
      out += ", ";
      out += format_number(e.base());
      out += ')';
      return;
    case Op::kCall:
      out += e.name();
      out += '(';
      emit(e.child(0), out);
      out += ')';
      return;
    default:
      out += function_name(e.op());
      out += '(';
      emit(e.child(0), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string format(const Expr& e) {
  std::string out;
  emit(e, out);
  return out;
}

}  // namespace lagrangeforge
