#include "dualstop/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "dualstop/common.hpp"
#include "dualstop/normal.hpp"

namespace dualstop {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, Expression& out) : text_(text), out_(out) {}

  std::size_t parse() {
    const auto root = sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return root;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression \"" + std::string(text_) + "\": " + what + " at offset " +
                      std::to_string(pos_));
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

  std::size_t add(Expression::Node node) {
    out_.nodes_.push_back(std::move(node));
    return out_.nodes_.size() - 1;
  }

  std::size_t sum() {
    auto left = product();
    for (;;) {
      if (accept('+')) {
        left = add({Op::add, 0.0, {}, 0, {left, product()}});
      } else if (accept('-')) {
        left = add({Op::sub, 0.0, {}, 0, {left, product()}});
      } else {
        return left;
      }
    }
  }

  std::size_t product() {
    auto left = unary();
    for (;;) {
      if (accept('*')) {
        left = add({Op::mul, 0.0, {}, 0, {left, unary()}});
      } else if (accept('/')) {
        left = add({Op::div, 0.0, {}, 0, {left, unary()}});
      } else {
        return left;
      }
    }
  }

  std::size_t unary() {
    if (accept('-')) return add({Op::neg, 0.0, {}, 0, {unary()}});
    if (accept('+')) return unary();
    return primary();
  }

  std::size_t primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (accept('(')) {
      const auto inner = sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::size_t number() {
    double v = 0.0;
    const auto* first = text_.data() + pos_;
    const auto [end, ec] = std::from_chars(first, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("bad number");
    pos_ += static_cast<std::size_t>(end - first);
    return add({Op::number, v, {}, 0, {}});
  }

  std::size_t identifier() {
    const auto start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    std::string name(text_.substr(start, pos_ - start));
    if (!accept('(')) return add({Op::variable, 0.0, std::move(name), 0, {}});

    std::vector<std::size_t> args;
    if (!accept(')')) {
      do {
        args.push_back(sum());
      } while (accept(','));
      if (!accept(')')) fail("expected ')' after arguments of " + name);
    }
    Op op;
    if (name == "exp") {
      op = Op::exp;
    } else if (name == "ncdf") {
      op = Op::ncdf;
    } else if (name == "max") {
      op = Op::max;
    } else {
      fail("unknown function " + name);
    }
    if (op == Op::max ? args.empty() : args.size() != 1) fail("wrong argument count for " + name);
    return add({op, 0.0, {}, 0, std::move(args)});
  }

  std::string_view text_;
  Expression& out_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  e.root_ = ExpressionParser(e.text_, e).parse();
  return e;
}

std::vector<std::string> Expression::variables() const {
  std::vector<std::string> names;
  for (const auto& n : nodes_) {
    if (n.op == Op::variable && std::find(names.begin(), names.end(), n.name) == names.end()) {
      names.push_back(n.name);
    }
  }
  return names;
}

void Expression::bind(std::span<const std::string> names) {
  for (auto& n : nodes_) {
    if (n.op != Op::variable) continue;
    const auto it = std::find(names.begin(), names.end(), n.name);
    if (it == names.end()) {
      throw ConfigError("expression \"" + text_ + "\": unknown variable " + n.name);
    }
    n.slot = static_cast<std::size_t>(it - names.begin());
  }
  bound_ = true;
}

double Expression::eval(std::span<const double> slots) const {
  if (!bound_ && !variables().empty()) throw ConfigError("expression \"" + text_ + "\" evaluated before bind");
  return eval_node(root_, slots);
}

double Expression::eval_node(std::size_t i, std::span<const double> slots) const {
  const auto& n = nodes_[i];
  auto arg = [&](std::size_t k) { return eval_node(n.args[k], slots); };
  switch (n.op) {
    case Op::number:
      return n.value;
    case Op::variable:
      return slots[n.slot];
    case Op::neg:
      return -arg(0);
    case Op::add:
      return arg(0) + arg(1);
    case Op::sub:
      return arg(0) - arg(1);
    case Op::mul:
      return arg(0) * arg(1);
    case Op::div:
      return arg(0) / arg(1);
    case Op::exp:
      return std::exp(arg(0));
    case Op::ncdf:
      return normal_cdf(arg(0));
    case Op::max: {
      double m = arg(0);
      for (std::size_t k = 1; k < n.args.size(); ++k) m = std::max(m, arg(k));
      return m;
    }
  }
  return 0.0;
}

}  // namespace dualstop
