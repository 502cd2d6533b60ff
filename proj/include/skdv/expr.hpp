#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "skdv/waves.hpp"

namespace skdv {

class ExpressionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arithmetic expression in one variable x: numbers, pi, e, + - * / ^,
/// parentheses, and sin cos tan exp log sqrt abs sinh cosh tanh sech atan.
class Expression {
 public:
  explicit Expression(std::string_view text) : text_(text) {
    pos_ = 0;
    root_ = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
  }

  double operator()(double x) const { return eval(*root_, x); }

  bool uses_x() const { return uses(*root_); }
  const std::string& text() const { return text_; }

 private:
  enum class Op { num, var, add, sub, mul, div, pow, neg, call };
  struct Node {
    Op op;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::unique_ptr<Node> lhs, rhs;
  };
  using NodePtr = std::unique_ptr<Node>;

  static NodePtr leaf(Op op, double v = 0.0) {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->value = v;
    return n;
  }
  static NodePtr binary(Op op, NodePtr a, NodePtr b) {
    auto n = leaf(op);
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("expression '" + text_ + "' at column " + std::to_string(pos_ + 1) +
                          ": " + what);
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

  NodePtr parse_sum() {
    NodePtr n = parse_product();
    while (true) {
      if (accept('+')) {
        n = binary(Op::add, std::move(n), parse_product());
      } else if (accept('-')) {
        n = binary(Op::sub, std::move(n), parse_product());
      } else {
        return n;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr n = parse_unary();
    while (true) {
      if (accept('*')) {
        n = binary(Op::mul, std::move(n), parse_unary());
      } else if (accept('/')) {
        n = binary(Op::div, std::move(n), parse_unary());
      } else {
        return n;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto n = leaf(Op::neg);
      n->lhs = parse_unary();
      return n;
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  // right associative; binds tighter than unary minus on its left
  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (accept('^')) return binary(Op::pow, std::move(base), parse_unary());
    return base;
  }

  NodePtr parse_atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr n = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const char* first = text_.data() + pos_;
      const auto res = std::from_chars(first, text_.data() + text_.size(), v);
      if (res.ec != std::errc()) fail("malformed number");
      pos_ += static_cast<std::size_t>(res.ptr - first);
      return leaf(Op::num, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                     text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name = text_.substr(start, pos_ - start);
      if (name == "x") return leaf(Op::var);
      if (name == "pi") return leaf(Op::num, std::numbers::pi);
      if (name == "e") return leaf(Op::num, std::numbers::e);
      auto fn = function(name);
      if (!fn) {
        pos_ = start;
        fail("unknown name '" + name + "'");
      }
      if (!accept('(')) fail("expected '(' after " + name);
      auto n = leaf(Op::call);
      n->fn = fn;
      n->lhs = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  static double (*function(const std::string& name))(double) {
    struct Entry {
      const char* name;
      double (*fn)(double);
    };
    static const Entry table[] = {
        {"sin", [](double x) { return std::sin(x); }},
        {"cos", [](double x) { return std::cos(x); }},
        {"tan", [](double x) { return std::tan(x); }},
        {"exp", [](double x) { return std::exp(x); }},
        {"log", [](double x) { return std::log(x); }},
        {"sqrt", [](double x) { return std::sqrt(x); }},
        {"abs", [](double x) { return std::abs(x); }},
        {"sinh", [](double x) { return std::sinh(x); }},
        {"cosh", [](double x) { return std::cosh(x); }},
        {"tanh", [](double x) { return std::tanh(x); }},
        {"sech", [](double x) { return sech(x); }},
        {"atan", [](double x) { return std::atan(x); }},
    };
    for (const auto& e : table) {
      if (name == e.name) return e.fn;
    }
    return nullptr;
  }

  static double eval(const Node& n, double x) {
    switch (n.op) {
      case Op::num:
        return n.value;
      case Op::var:
        return x;
      case Op::add:
        return eval(*n.lhs, x) + eval(*n.rhs, x);
      case Op::sub:
        return eval(*n.lhs, x) - eval(*n.rhs, x);
      case Op::mul:
        return eval(*n.lhs, x) * eval(*n.rhs, x);
      case Op::div:
        return eval(*n.lhs, x) / eval(*n.rhs, x);
      case Op::pow:
        return std::pow(eval(*n.lhs, x), eval(*n.rhs, x));
      case Op::neg:
        return -eval(*n.lhs, x);
      case Op::call:
        return n.fn(eval(*n.lhs, x));
    }
    return 0.0;
  }

  static bool uses(const Node& n) {
    if (n.op == Op::var) return true;
    return (n.lhs && uses(*n.lhs)) || (n.rhs && uses(*n.rhs));
  }

  std::string text_;
  std::size_t pos_ = 0;
  NodePtr root_;
};

/// Value of a constant expression such as "-1/12" or "2*pi".
inline double evaluate_constant(std::string_view text) {
  const Expression e(text);
  if (e.uses_x()) throw ExpressionError("expression '" + std::string(text) + "' must not use x");
  return e(0.0);
}

}  // namespace skdv
