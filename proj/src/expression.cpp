#include "dnl/expression.hpp"

#include <cctype>
#include <cmath>

namespace dnl {

namespace {

constexpr const char* kFunctions[] = {"exp", "sin", "cos", "sqrt", "log", "abs"};
constexpr int kNumFunctions = 6;

double apply_function(int fn, double x) {
  switch (fn) {
    case 0: return std::exp(x);
    case 1: return std::sin(x);
    case 2: return std::cos(x);
    case 3: return std::sqrt(x);
    case 4: return std::log(x);
    default: return std::abs(x);
  }
}

}  // namespace

class ExpressionParser {
 public:
  explicit ExpressionParser(Expression& out) : e_(out) {}

  void run() {
    root() = expr();
    skip_space();
    if (pos_ < e_.text_.size()) fail("unexpected trailing input");
  }

 private:
  Expression& e_;
  std::size_t pos_ = 0;

  int& root() { return e_.root_; }
  [[noreturn]] void fail(const std::string& msg) const { throw ExpressionError(msg, pos_); }

  void skip_space() {
    while (pos_ < e_.text_.size() && std::isspace(static_cast<unsigned char>(e_.text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < e_.text_.size() && e_.text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < e_.text_.size() ? e_.text_[pos_] : '\0';
  }

  int make(Expression::Node n) {
    e_.nodes_.push_back(n);
    return static_cast<int>(e_.nodes_.size()) - 1;
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (consume('+'))
        lhs = make({Expression::Op::add, 0.0, lhs, term(), -1});
      else if (consume('-'))
        lhs = make({Expression::Op::sub, 0.0, lhs, term(), -1});
      else
        return lhs;
    }
  }

  int term() {
    int lhs = factor();
    for (;;) {
      if (consume('*'))
        lhs = make({Expression::Op::mul, 0.0, lhs, factor(), -1});
      else if (consume('/'))
        lhs = make({Expression::Op::div, 0.0, lhs, factor(), -1});
      else
        return lhs;
    }
  }

  int factor() {  // right-associative power
    int base = unary();
    if (consume('^')) return make({Expression::Op::pow, 0.0, base, factor(), -1});
    return base;
  }

  int unary() {
    if (consume('-')) return make({Expression::Op::neg, 0.0, unary(), -1, -1});
    consume('+');
    return primary();
  }

  int primary() {
    skip_space();
    if (pos_ >= e_.text_.size()) fail("unexpected end of expression");
    const char c = e_.text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (consume('(')) {
      const int inner = expr();
      if (!consume(')')) fail("expected ')'");
      return inner;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  int number() {
    const char* begin = e_.text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return make({Expression::Op::number, v, -1, -1, -1});
  }

  int identifier() {
    const std::size_t start = pos_;
    while (pos_ < e_.text_.size() &&
           (std::isalnum(static_cast<unsigned char>(e_.text_[pos_])) || e_.text_[pos_] == '_'))
      ++pos_;
    const std::string name = e_.text_.substr(start, pos_ - start);
    if (name == "x1" || name == "x") return make({Expression::Op::var_x1, 0.0, -1, -1, -1});
    if (name == "x2" || name == "y") return make({Expression::Op::var_x2, 0.0, -1, -1, -1});
    if (name == "pi") return make({Expression::Op::number, M_PI, -1, -1, -1});
    for (int f = 0; f < kNumFunctions; ++f) {
      if (name == kFunctions[f]) {
        if (!consume('(')) fail("function '" + name + "' requires '('");
        const int arg = expr();
        if (!consume(')')) fail("expected ')' after argument of '" + name + "'");
        return make({Expression::Op::call, 0.0, arg, -1, f});
      }
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }
};

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  ExpressionParser(e).run();
  return e;
}

double Expression::eval(double x1, double x2) const {
  std::vector<double> v(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {  // children precede parents
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::number: v[i] = n.number; break;
      case Op::var_x1: v[i] = x1; break;
      case Op::var_x2: v[i] = x2; break;
      case Op::add: v[i] = v[n.lhs] + v[n.rhs]; break;
      case Op::sub: v[i] = v[n.lhs] - v[n.rhs]; break;
      case Op::mul: v[i] = v[n.lhs] * v[n.rhs]; break;
      case Op::div: v[i] = v[n.lhs] / v[n.rhs]; break;
      case Op::pow: v[i] = std::pow(v[n.lhs], v[n.rhs]); break;
      case Op::neg: v[i] = -v[n.lhs]; break;
      case Op::call: v[i] = apply_function(n.fn, v[n.lhs]); break;
    }
  }
  return v[root_];
}

}  // namespace dnl
