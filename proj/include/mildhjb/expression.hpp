#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mildhjb/error.hpp"

namespace mildhjb {

/// Parse failure; `column` is 1-based within the expression text.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t column)
      : ConfigError(what), column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// Raised when a derivative of abs(...) is requested.
class NonDifferentiableError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Small arithmetic expression: + - * / ^, unary minus, numbers with optional
/// exponent, the constants pi and e, and exp log sqrt sin cos tanh abs.
/// Variables are named at parse time.  Immutable; copies share the tree.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text,
                          std::vector<std::string> variables = {"x"});

  double evaluate(std::span<const double> vars) const;
  double operator()(double x) const;
  double operator()(double x, double y) const;

  /// Symbolic derivative with respect to variable `var`.  Throws
  /// NonDifferentiableError for abs.
  Expression derivative(std::size_t var = 0) const;
  bool differentiable() const;

  std::string to_string() const;
  const std::vector<std::string>& variables() const { return vars_; }

 private:
  Expression(std::shared_ptr<const Node> root, std::vector<std::string> vars);
  std::shared_ptr<const Node> root_;
  std::vector<std::string> vars_;
};

}  // namespace mildhjb
