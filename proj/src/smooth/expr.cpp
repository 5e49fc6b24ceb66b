#include "dwell/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "dwell/errors.hpp"

namespace dwell {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text, Expression& out) : s_(text), out_(out) {}

  int parse() {
    const int root = expression();
    skip_space();
    if (pos_ != s_.size()) fail("unexpected input");
    return root;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidParams("expression '" + std::string(s_) + "': " + what + " at position " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (s_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  int node(Op op, int lhs = -1, int rhs = -1, double value = 0.0) {
    out_.nodes_.push_back({op, value, lhs, rhs});
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int expression() {
    int lhs = term();
    for (;;) {
      if (accept("+")) lhs = node(Op::Add, lhs, term());
      else if (accept("-")) lhs = node(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  int term() {
    int lhs = unary();
    for (;;) {
      if (accept("*") || accept("×")) lhs = node(Op::Mul, lhs, unary());
      else if (accept("/") || accept("÷")) lhs = node(Op::Div, lhs, unary());
      else return lhs;
    }
  }

  int unary() {
    if (accept("-")) return node(Op::Neg, unary());
    if (accept("+")) return unary();
    return power();
  }

  int power() {
    const int base = primary();
    if (accept("^")) return node(Op::Pow, base, unary());
    return base;
  }

  int primary() {
    skip_space();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    if (accept("(")) {
      const int inner = expression();
      if (!accept(")")) fail("expected ')'");
      return inner;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string_view name = s_.substr(start, pos_ - start);
      if (name == "x") return node(Op::X);
      if (name == "y") return node(Op::Y);
      if (name == "pi") return node(Op::Const, -1, -1, std::numbers::pi);
      Op f;
      if (name == "exp") f = Op::Exp;
      else if (name == "sin") f = Op::Sin;
      else if (name == "cos") f = Op::Cos;
      else if (name == "sqrt") f = Op::Sqrt;
      else {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      if (!accept("(")) fail("expected '(' after " + std::string(name));
      const int arg = expression();
      if (!accept(")")) fail("expected ')'");
      return node(f, arg);
    }
    fail("unexpected character");
  }

  int number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (ec != std::errc() || end != s_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return node(Op::Const, -1, -1, v);
  }

  std::string_view s_;
  Expression& out_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.source_ = std::string(text);
  ExpressionParser parser(e.source_, e);
  e.root_ = parser.parse();
  return e;
}

double Expression::operator()(double x, double y) const { return eval(root_, x, y); }

double Expression::eval(int i, double x, double y) const {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::X: return x;
    case Op::Y: return y;
    case Op::Add: return eval(n.lhs, x, y) + eval(n.rhs, x, y);
    case Op::Sub: return eval(n.lhs, x, y) - eval(n.rhs, x, y);
    case Op::Mul: return eval(n.lhs, x, y) * eval(n.rhs, x, y);
    case Op::Div: return eval(n.lhs, x, y) / eval(n.rhs, x, y);
    case Op::Pow: {
      const double b = eval(n.lhs, x, y), p = eval(n.rhs, x, y);
      if (p == 2.0) return b * b;
      return std::pow(b, p);
    }
    case Op::Neg: return -eval(n.lhs, x, y);
    case Op::Exp: return std::exp(eval(n.lhs, x, y));
    case Op::Sin: return std::sin(eval(n.lhs, x, y));
    case Op::Cos: return std::cos(eval(n.lhs, x, y));
    case Op::Sqrt: return std::sqrt(eval(n.lhs, x, y));
  }
  return 0.0;
}

}  // namespace dwell
