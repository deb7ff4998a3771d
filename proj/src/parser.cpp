#include <cctype>
#include <charconv>

#include "lagrangeforge/error.hpp"
#include "lagrangeforge/expr.hpp"

namespace lagrangeforge {

namespace {

// Recursive descent over
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | identifier | identifier '(' args ')' | '(' sum ')'
class Parser {
 public:
  Parser(std::string_view text, const std::set<std::string, std::less<>>& params,
         const FunctionRegistry* functions)
      : text_(text), params_(params), functions_(functions) {}

  Expr parse() {
    Expr e = sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, ErrorCode code = ErrorCode::kSyntax) const {
    throw ParseError(code, msg, pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr sum() {
    Expr lhs = product();
    for (;;) {
      if (accept('+')) {
        lhs = add(lhs, product());
      } else if (accept('-')) {
        lhs = sub(lhs, product());
      } else {
        return lhs;
      }
    }
  }

  Expr product() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = mul(lhs, unary());
      } else if (accept('/')) {
        lhs = div(lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return neg(unary());
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return pow(base, unary());
    return base;
  }

  Expr number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double value = 0.0;
    auto res = std::from_chars(first, last, value, std::chars_format::general);
    if (res.ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(res.ptr - first);
    return constant(value);
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  Expr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (accept('(')) {
      Expr e = sum();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      std::string id = identifier();
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == '(') return call_expr(id, start);
      if (variable_from_name(id) || params_.count(id) != 0) return var(id);
      pos_ = start;
      fail("unknown identifier '" + id + "'", ErrorCode::kUnknownIdentifier);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr call_expr(const std::string& id, std::size_t start) {
    expect('(');
    if (id == "antideriv") {
      Expr integrand = sum();
      expect(',');
      skip_space();
      const std::size_t var_pos = pos_;
      std::string name = identifier();
      auto v = variable_from_name(name);
      if (!v) {
        pos_ = var_pos;
        fail("antideriv variable must be x, v or t");
      }
      expect(',');
      Expr base = sum();
      if (!base.is_constant()) fail("antideriv base must be a number");
      expect(')');
      return antideriv(integrand, *v, base.constant_value());
    }
    Expr arg = sum();
    expect(')');
    if (id == "exp") return exp(arg);
    if (id == "ln") return ln(arg);
    if (id == "abs") return abs(arg);
    if (id == "sqrt") return sqrt(arg);
    if (id == "sin") return sin(arg);
    if (id == "cos") return cos(arg);
    if (functions_ != nullptr) {
      if (auto it = functions_->find(id); it != functions_->end()) return call(it->second, arg);
    }
    pos_ = start;
    fail("unknown function '" + id + "'", ErrorCode::kUnknownIdentifier);
  }

  std::string_view text_;
  const std::set<std::string, std::less<>>& params_;
  const FunctionRegistry* functions_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view text, const std::set<std::string, std::less<>>& params,
                      const FunctionRegistry* functions) {
  return Parser(text, params, functions).parse();
}

}  // namespace lagrangeforge
