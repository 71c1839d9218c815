#pragma once

#include <memory>
#include <string>

namespace hydroschro {

// Restricted closed-form expression grammar for profile definitions:
// numeric literals, `x`, `pi`, binary + - *, unary -, parentheses, and the
// functions cos, sin, exp. Example: "1 + 0.3*cos(2*pi*x)".
class Expr {
 public:
  static Expr parse(const std::string& text);
  double eval(double x) const;
  const std::string& text() const { return text_; }

  Expr(Expr&&) noexcept;
  Expr& operator=(Expr&&) noexcept;
  ~Expr();

  struct Node;

 private:
  Expr();
  std::unique_ptr<Node> root_;
  std::string text_;
};

}  // namespace hydroschro
