#pragma once

#include <memory>
#include <optional>
#include <string>

#include "lvfa/errors.hpp"

namespace lvfa {

// Scalar functions of time, parsed from a small arithmetic grammar:
//
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ['^' exponent]          exponent must be an integer
//   atom   := number | 't' | fn '(' expr [',' expr] ')' | '(' expr ')'
//   fn     := sin | cos | exp | tanh | abs | min | max
//
// '^' binds tighter than unary minus; '+','-','*','/' associate left.

enum class BinOp { Add, Sub, Mul, Div };
enum class FnOp { Sin, Cos, Exp, Tanh, Abs, Min, Max };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { Const, Time, Neg, Binary, Pow, Call };
  Kind kind = Kind::Const;
  double value = 0.0;  // Const
  BinOp bin = BinOp::Add;
  FnOp fn = FnOp::Sin;
  int exponent = 0;  // Pow
  ExprPtr a, b;
};

struct BoundEstimate {
  double inf = 0.0;
  double sup = 0.0;
  enum class Source { Declared, Sampled } source = Source::Sampled;
};

class TimeFn {
 public:
  TimeFn() = default;
  explicit TimeFn(ExprPtr root) : root_(std::move(root)) {}

  static TimeFn parse(const std::string& text);
  static TimeFn constant(double v);

  double operator()(double t) const { return eval(t); }
  double eval(double t) const;

  bool is_constant() const;
  std::string to_string() const;
  bool same_structure(const TimeFn& other) const;

  // Optional caller-declared range, validated against samples on use.
  std::optional<double> declared_inf, declared_sup;

  const ExprPtr& root() const { return root_; }

 private:
  ExprPtr root_;
};

// Range estimate over [window_lo, window_hi] from `samples` uniform nodes
// (samples >= 2). Declared bounds, when both present, are validated against
// every sample (tolerance 1e-12) and then returned verbatim; a contradiction
// raises BoundsError naming the offending time. A partial declaration is
// validated on its side and merged with the sampled value for the other.
BoundEstimate estimate_bounds(const TimeFn& f, double window_lo, double window_hi,
                              int samples);

}  // namespace lvfa
