#include "mildhjb/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mildhjb {

enum class Op { constant, variable, add, sub, mul, div, pow, neg, func };
enum class Fn { exp, log, sqrt, sin, cos, tanh, abs };

struct Expression::Node {
  Op op;
  double value = 0.0;     // constant
  std::size_t var = 0;    // variable
  Fn fn = Fn::exp;        // func
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

NodePtr make_const(double v) {
  return std::make_shared<const Node>(Node{Op::constant, v, 0, Fn::exp, nullptr, nullptr});
}
NodePtr make_var(std::size_t i) {
  return std::make_shared<const Node>(Node{Op::variable, 0.0, i, Fn::exp, nullptr, nullptr});
}
bool is_const(const NodePtr& n, double v) {
  return n->op == Op::constant && n->value == v;
}
bool is_const(const NodePtr& n) { return n->op == Op::constant; }

double apply_fn(Fn fn, double x) {
  switch (fn) {
    case Fn::exp: return std::exp(x);
    case Fn::log: return std::log(x);
    case Fn::sqrt: return std::sqrt(x);
    case Fn::sin: return std::sin(x);
    case Fn::cos: return std::cos(x);
    case Fn::tanh: return std::tanh(x);
    case Fn::abs: return std::abs(x);
  }
  return 0.0;
}

const char* fn_name(Fn fn) {
  switch (fn) {
    case Fn::exp: return "exp";
    case Fn::log: return "log";
    case Fn::sqrt: return "sqrt";
    case Fn::sin: return "sin";
    case Fn::cos: return "cos";
    case Fn::tanh: return "tanh";
    case Fn::abs: return "abs";
  }
  return "?";
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) {
    switch (op) {
      case Op::add: return make_const(a->value + b->value);
      case Op::sub: return make_const(a->value - b->value);
      case Op::mul: return make_const(a->value * b->value);
      case Op::div: return make_const(a->value / b->value);
      case Op::pow: return make_const(std::pow(a->value, b->value));
      default: break;
    }
  }
  switch (op) {
    case Op::add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::sub:
      if (is_const(b, 0.0)) return a;
      break;
    case Op::mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::div:
      if (is_const(a, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::pow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return make_const(1.0);
      break;
    default: break;
  }
  return std::make_shared<const Node>(Node{op, 0.0, 0, Fn::exp, std::move(a), std::move(b)});
}

NodePtr make_neg(NodePtr a) {
  if (is_const(a)) return make_const(-a->value);
  return std::make_shared<const Node>(Node{Op::neg, 0.0, 0, Fn::exp, std::move(a), nullptr});
}

NodePtr make_fn(Fn fn, NodePtr a) {
  if (is_const(a)) return make_const(apply_fn(fn, a->value));
  return std::make_shared<const Node>(Node{Op::func, 0.0, 0, fn, std::move(a), nullptr});
}

NodePtr add(NodePtr a, NodePtr b) { return make_binary(Op::add, std::move(a), std::move(b)); }
NodePtr sub(NodePtr a, NodePtr b) { return make_binary(Op::sub, std::move(a), std::move(b)); }
NodePtr mul(NodePtr a, NodePtr b) { return make_binary(Op::mul, std::move(a), std::move(b)); }
NodePtr divide(NodePtr a, NodePtr b) { return make_binary(Op::div, std::move(a), std::move(b)); }
NodePtr power(NodePtr a, NodePtr b) { return make_binary(Op::pow, std::move(a), std::move(b)); }

double eval(const Node& n, std::span<const double> vars) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return vars[n.var];
    case Op::add: return eval(*n.a, vars) + eval(*n.b, vars);
    case Op::sub: return eval(*n.a, vars) - eval(*n.b, vars);
    case Op::mul: return eval(*n.a, vars) * eval(*n.b, vars);
    case Op::div: return eval(*n.a, vars) / eval(*n.b, vars);
    case Op::pow: {
      const double base = eval(*n.a, vars);
      if (n.b->op == Op::constant && n.b->value == 2.0) return base * base;
      return std::pow(base, eval(*n.b, vars));
    }
    case Op::neg: return -eval(*n.a, vars);
    case Op::func: return apply_fn(n.fn, eval(*n.a, vars));
  }
  return 0.0;
}

NodePtr diff(const NodePtr& n, std::size_t v) {
  switch (n->op) {
    case Op::constant: return make_const(0.0);
    case Op::variable: return make_const(n->var == v ? 1.0 : 0.0);
    case Op::add: return add(diff(n->a, v), diff(n->b, v));
    case Op::sub: return sub(diff(n->a, v), diff(n->b, v));
    case Op::neg: return make_neg(diff(n->a, v));
    case Op::mul:
      return add(mul(diff(n->a, v), n->b), mul(n->a, diff(n->b, v)));
    case Op::div:
      return divide(sub(mul(diff(n->a, v), n->b), mul(n->a, diff(n->b, v))),
                    power(n->b, make_const(2.0)));
    case Op::pow: {
      const NodePtr da = diff(n->a, v);
      if (is_const(n->b)) {
        const double k = n->b->value;
        return mul(mul(make_const(k), power(n->a, make_const(k - 1.0))), da);
      }
      const NodePtr db = diff(n->b, v);
      return mul(n, add(mul(db, make_fn(Fn::log, n->a)),
                        divide(mul(n->b, da), n->a)));
    }
    case Op::func: {
      const NodePtr du = diff(n->a, v);
      switch (n->fn) {
        case Fn::exp: return mul(n, du);
        case Fn::log: return divide(du, n->a);
        case Fn::sqrt: return divide(du, mul(make_const(2.0), n));
        case Fn::sin: return mul(make_fn(Fn::cos, n->a), du);
        case Fn::cos: return make_neg(mul(make_fn(Fn::sin, n->a), du));
        case Fn::tanh:
          return mul(sub(make_const(1.0), power(n, make_const(2.0))), du);
        case Fn::abs:
          throw NonDifferentiableError(
              "abs(...) is not differentiable but a derivative is required");
      }
    }
  }
  return make_const(0.0);
}

bool has_abs(const NodePtr& n) {
  if (!n) return false;
  if (n->op == Op::func && n->fn == Fn::abs) return true;
  return has_abs(n->a) || has_abs(n->b);
}

int precedence(Op op) {
  switch (op) {
    case Op::add: case Op::sub: return 1;
    case Op::mul: case Op::div: return 2;
    case Op::neg: return 3;
    case Op::pow: return 4;
    default: return 5;
  }
}

void print(std::ostream& os, const NodePtr& n,
           const std::vector<std::string>& vars, int parent) {
  const int p = precedence(n->op);
  const bool paren = p < parent;
  if (paren) os << '(';
  switch (n->op) {
    case Op::constant: {
      std::ostringstream num;
      num.precision(17);
      num << n->value;
      os << num.str();
      break;
    }
    case Op::variable: os << vars[n->var]; break;
    case Op::add: print(os, n->a, vars, p); os << " + "; print(os, n->b, vars, p); break;
    case Op::sub: print(os, n->a, vars, p); os << " - "; print(os, n->b, vars, p + 1); break;
    case Op::mul: print(os, n->a, vars, p); os << '*'; print(os, n->b, vars, p); break;
    case Op::div: print(os, n->a, vars, p); os << '/'; print(os, n->b, vars, p + 1); break;
    case Op::pow: print(os, n->a, vars, p + 1); os << '^'; print(os, n->b, vars, p); break;
    case Op::neg: os << '-'; print(os, n->a, vars, p); break;
    case Op::func: os << fn_name(n->fn) << '('; print(os, n->a, vars, 0); os << ')'; break;
  }
  if (paren) os << ')';
}

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars)
      : text_(text), vars_(vars) {}

  NodePtr parse() {
    skip();
    if (pos_ >= text_.size()) fail("empty expression");
    NodePtr n = expr();
    skip();
    if (pos_ < text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at column " + std::to_string(pos_ + 1), pos_ + 1);
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) n = add(n, term());
      else if (accept('-')) n = sub(n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = mul(n, unary());
      else if (accept('/')) n = divide(n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make_neg(unary());
    if (accept('+')) return unary();
    return pow_expr();
  }
  NodePtr pow_expr() {
    NodePtr base = primary();
    if (accept('^')) return power(base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    fail(std::string("unexpected '") + c + "'");
  }
  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits();
      } else {
        pos_ = save;
      }
    }
    const std::string tok(text_.substr(start, pos_ - start));
    if (tok == ".") {
      pos_ = start;
      fail("malformed number");
    }
    return make_const(std::stod(tok));
  }
  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) return make_var(i);
    }
    if (name == "pi") return make_const(std::numbers::pi);
    if (name == "e") return make_const(std::numbers::e);
    static const std::pair<const char*, Fn> kFns[] = {
        {"exp", Fn::exp}, {"log", Fn::log}, {"sqrt", Fn::sqrt}, {"sin", Fn::sin},
        {"cos", Fn::cos}, {"tanh", Fn::tanh}, {"abs", Fn::abs}};
    for (const auto& [fname, fn] : kFns) {
      if (name == fname) {
        if (!accept('(')) fail("expected '(' after " + name);
        NodePtr arg = expr();
        if (!accept(')')) fail("expected ')'");
        return make_fn(fn, arg);
      }
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(std::shared_ptr<const Node> root,
                       std::vector<std::string> vars)
    : root_(std::move(root)), vars_(std::move(vars)) {}

Expression Expression::parse(std::string_view text,
                             std::vector<std::string> variables) {
  Parser p(text, variables);
  NodePtr root = p.parse();
  return Expression(std::move(root), std::move(variables));
}

double Expression::evaluate(std::span<const double> vars) const {
  return eval(*root_, vars);
}

double Expression::operator()(double x) const {
  const double v[1] = {x};
  return eval(*root_, v);
}

double Expression::operator()(double x, double y) const {
  const double v[2] = {x, y};
  return eval(*root_, v);
}

Expression Expression::derivative(std::size_t var) const {
  return Expression(diff(root_, var), vars_);
}

bool Expression::differentiable() const { return !has_abs(root_); }

std::string Expression::to_string() const {
  std::ostringstream os;
  print(os, root_, vars_, 0);
  return os.str();
}

}  // namespace mildhjb
