#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dualstop {

/// Small arithmetic expression: numbers, variables, + - * /, unary minus,
/// parentheses and the functions exp(x), max(x, y, ...), ncdf(x).
///
/// Variables are bound to slots once; evaluation then reads a slot array.
class Expression {
 public:
  static Expression parse(std::string_view text);

  const std::string& text() const { return text_; }
  std::vector<std::string> variables() const;

  /// Maps every variable to its position in `names`; throws ConfigError for unknown names.
  void bind(std::span<const std::string> names);
  double eval(std::span<const double> slots) const;

 private:
  enum class Op { number, variable, neg, add, sub, mul, div, exp, max, ncdf };
  struct Node {
    Op op;
    double value = 0.0;
    std::string name;
    std::size_t slot = 0;
    std::vector<std::size_t> args;
  };
  friend class ExpressionParser;

  double eval_node(std::size_t i, std::span<const double> slots) const;

  std::string text_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
  bool bound_ = false;
};

}  // namespace dualstop
