#pragma once

// Arithmetic expressions in x and y for user-defined potentials.
//
// Grammar: numbers, the variables x and y, the constant pi, binary + - * /
// (also the Unicode multiplication and division signs) and right-associative
// ^, unary minus, parentheses, and the functions exp, sin, cos, sqrt.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace dwell {

class Expression {
 public:
  /// Throws InvalidParams with the offending position on a syntax error.
  static Expression parse(std::string_view text);

  double operator()(double x, double y) const;
  const std::string& source() const { return source_; }

 private:
  enum class Op : unsigned char { Const, X, Y, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos, Sqrt };
  struct Node {
    Op op;
    double value = 0.0;
    int lhs = -1;
    int rhs = -1;
  };
  friend class ExpressionParser;

  double eval(int node, double x, double y) const;

  std::string source_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace dwell
