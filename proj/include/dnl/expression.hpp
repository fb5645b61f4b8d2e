#pragma once
// Tiny arithmetic expression language for coefficient and boundary-data
// specifications: + - * / ^ with parentheses, functions exp/sin/cos/sqrt/
// log/abs, variables x1 and x2 (aliases x, y), constant pi.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnl {

struct ExpressionError : std::runtime_error {
  ExpressionError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
  std::size_t position;
};

class Expression {
 public:
  static Expression parse(const std::string& text);  // throws ExpressionError
  double eval(double x1, double x2) const;
  const std::string& text() const { return text_; }

 private:
  enum class Op { number, var_x1, var_x2, add, sub, mul, div, pow, neg, call };
  struct Node {
    Op op;
    double number = 0.0;
    int lhs = -1, rhs = -1;
    int fn = -1;
  };
  std::string text_;
  std::vector<Node> nodes_;
  int root_ = -1;

  friend class ExpressionParser;
};

}  // namespace dnl
