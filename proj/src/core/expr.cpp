#include "core/expr.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hydroschro {

struct Expr::Node {
  enum class Kind { constant, var, add, sub, mul, neg, cos, sin, exp };
  Kind kind;
  double value = 0.0;
  std::unique_ptr<Node> a, b;

  double eval(double x) const {
    switch (kind) {
      case Kind::constant: return value;
      case Kind::var: return x;
      case Kind::add: return a->eval(x) + b->eval(x);
      case Kind::sub: return a->eval(x) - b->eval(x);
      case Kind::mul: return a->eval(x) * b->eval(x);
      case Kind::neg: return -a->eval(x);
      case Kind::cos: return std::cos(a->eval(x));
      case Kind::sin: return std::sin(a->eval(x));
      case Kind::exp: return std::exp(a->eval(x));
    }
    return 0.0;
  }
};

namespace {

using Node = Expr::Node;
using Kind = Node::Kind;

struct Parser {
  const std::string& s;
  size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool consume(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("expression parse error at position " +
                                std::to_string(pos) + ": " + what + " in \"" + s + "\"");
  }

  std::unique_ptr<Node> make(Kind k) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    return n;
  }

  std::unique_ptr<Node> parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      skip_ws();
      if (consume('+')) {
        auto n = make(Kind::add);
        n->a = std::move(lhs);
        n->b = parse_product();
        lhs = std::move(n);
      } else if (consume('-')) {
        auto n = make(Kind::sub);
        n->a = std::move(lhs);
        n->b = parse_product();
        lhs = std::move(n);
      } else {
        return lhs;
      }
    }
  }

  std::unique_ptr<Node> parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      if (consume('*')) {
        auto n = make(Kind::mul);
        n->a = std::move(lhs);
        n->b = parse_unary();
        lhs = std::move(n);
      } else {
        return lhs;
      }
    }
  }

  std::unique_ptr<Node> parse_unary() {
    if (consume('-')) {
      auto n = make(Kind::neg);
      n->a = parse_unary();
      return n;
    }
    return parse_atom();
  }

  std::string read_ident() {
    skip_ws();
    std::string id;
    while (pos < s.size() &&
           (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      id += s[pos++];
    return id;
  }

  std::unique_ptr<Node> parse_atom() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of input");
    const char c = s[pos];
    if (c == '(') {
      ++pos;
      auto inner = parse_sum();
      if (!consume(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double val;
      try {
        val = std::stod(s.substr(pos), &used);
      } catch (const std::exception&) {
        fail("bad numeric literal");
      }
      pos += used;
      auto n = make(Kind::constant);
      n->value = val;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::string id = read_ident();
      if (id == "x") return make(Kind::var);
      if (id == "pi") {
        auto n = make(Kind::constant);
        n->value = M_PI;
        return n;
      }
      Kind k;
      if (id == "cos") k = Kind::cos;
      else if (id == "sin") k = Kind::sin;
      else if (id == "exp") k = Kind::exp;
      else fail("unknown identifier '" + id + "'");
      if (!consume('(')) fail("expected '(' after function name");
      auto n = make(k);
      n->a = parse_sum();
      if (!consume(')')) fail("expected ')'");
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

Expr::Expr() = default;
Expr::Expr(Expr&&) noexcept = default;
Expr& Expr::operator=(Expr&&) noexcept = default;
Expr::~Expr() = default;

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  Expr e;
  e.root_ = p.parse_sum();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  e.text_ = text;
  return e;
}

double Expr::eval(double x) const { return root_->eval(x); }

}  // namespace hydroschro
