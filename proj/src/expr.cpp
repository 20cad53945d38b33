#include "lvfa/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <vector>

#include "lvfa/util.hpp"

namespace lvfa {
namespace {

bool is_const(const ExprPtr& e) { return e && e->kind == ExprNode::Kind::Const; }

ExprPtr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Const;
  n->value = v;
  return n;
}

double apply_fn(FnOp fn, double x, double y) {
  switch (fn) {
    case FnOp::Sin: return std::sin(x);
    case FnOp::Cos: return std::cos(x);
    case FnOp::Exp: return std::exp(x);
    case FnOp::Tanh: return std::tanh(x);
    case FnOp::Abs: return std::fabs(x);
    case FnOp::Min: return std::fmin(x, y);
    case FnOp::Max: return std::fmax(x, y);
  }
  return 0.0;
}

double eval_node(const ExprNode& n, double t) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::Const: return n.value;
    case K::Time: return t;
    case K::Neg: return -eval_node(*n.a, t);
    case K::Binary: {
      const double x = eval_node(*n.a, t);
      const double y = eval_node(*n.b, t);
      switch (n.bin) {
        case BinOp::Add: return x + y;
        case BinOp::Sub: return x - y;
        case BinOp::Mul: return x * y;
        case BinOp::Div:
          if (y == 0.0) throw EvalError("division by zero at t=" + format_double(t));
          return x / y;
      }
      return 0.0;
    }
    case K::Pow: {
      const double x = eval_node(*n.a, t);
      if (x == 0.0 && n.exponent < 0)
        throw EvalError("zero raised to negative power at t=" + format_double(t));
      return std::pow(x, static_cast<double>(n.exponent));
    }
    case K::Call: {
      const double x = eval_node(*n.a, t);
      const double y = n.b ? eval_node(*n.b, t) : 0.0;
      return apply_fn(n.fn, x, y);
    }
  }
  return 0.0;
}

// Folds pure-constant subtrees at build time. Division by zero and 0^-k are
// left unfolded so they surface as evaluation errors, not parse errors.
ExprPtr fold(ExprPtr n) {
  using K = ExprNode::Kind;
  switch (n->kind) {
    case K::Const:
    case K::Time:
      return n;
    case K::Neg:
      if (is_const(n->a)) return make_const(-n->a->value);
      return n;
    case K::Binary:
      if (is_const(n->a) && is_const(n->b)) {
        if (n->bin == BinOp::Div && n->b->value == 0.0) return n;
        return make_const(eval_node(*n, 0.0));
      }
      return n;
    case K::Pow:
      if (is_const(n->a)) {
        if (n->a->value == 0.0 && n->exponent < 0) return n;
        return make_const(eval_node(*n, 0.0));
      }
      return n;
    case K::Call:
      if (is_const(n->a) && (!n->b || is_const(n->b))) return make_const(eval_node(*n, 0.0));
      return n;
  }
  return n;
}

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  bool consume(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(std::size_t at, const std::string& msg) { throw ParseError(at, msg); }

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        const char op = s[pos++];
        ExprPtr rhs = parse_term();
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::Binary;
        n->bin = op == '+' ? BinOp::Add : BinOp::Sub;
        n->a = lhs;
        n->b = rhs;
        lhs = fold(n);
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (pos < s.size() && (s[pos] == '*' || s[pos] == '/')) {
        const char op = s[pos++];
        ExprPtr rhs = parse_unary();
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::Binary;
        n->bin = op == '*' ? BinOp::Mul : BinOp::Div;
        n->a = lhs;
        n->b = rhs;
        lhs = fold(n);
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_unary() {
    skip_ws();
    if (pos < s.size() && s[pos] == '-') {
      ++pos;
      ExprPtr inner = parse_unary();
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::Neg;
      n->a = inner;
      return fold(n);
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    skip_ws();
    if (pos < s.size() && s[pos] == '^') {
      ++pos;
      const std::size_t at = pos;
      ExprPtr expo = parse_exponent_operand();
      if (!is_const(expo)) fail(at, "exponent must be constant");
      const double v = expo->value;
      const double r = std::nearbyint(v);
      if (std::fabs(v - r) > 1e-9 || std::fabs(v) > 1e9) fail(at, "non-integer exponent");
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::Pow;
      n->a = base;
      n->exponent = static_cast<int>(r);
      return fold(n);
    }
    return base;
  }

  // Operand after '^': optional sign, then a number or parenthesized expr.
  ExprPtr parse_exponent_operand() {
    skip_ws();
    bool neg = false;
    if (pos < s.size() && s[pos] == '-') {
      neg = true;
      ++pos;
    }
    ExprPtr n = parse_atom();
    if (neg) {
      auto m = std::make_shared<ExprNode>();
      m->kind = ExprNode::Kind::Neg;
      m->a = n;
      n = fold(m);
    }
    return n;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos >= s.size()) fail(pos, "unexpected end of input");
    const char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    if (c == '(') {
      ++pos;
      ExprPtr inner = parse_expr();
      if (!consume(')')) fail(pos, "expected ')'");
      return inner;
    }
    fail(pos, "syntax error");
  }

  ExprPtr parse_number() {
    const std::size_t start = pos;
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail(start, "invalid number");
    pos += static_cast<std::size_t>(end - begin);
    return make_const(v);
  }

  ExprPtr parse_ident() {
    const std::size_t start = pos;
    while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
    const std::string name = s.substr(start, pos - start);
    if (name == "t") {
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::Time;
      return n;
    }
    FnOp fn;
    int arity = 1;
    if (name == "sin") fn = FnOp::Sin;
    else if (name == "cos") fn = FnOp::Cos;
    else if (name == "exp") fn = FnOp::Exp;
    else if (name == "tanh") fn = FnOp::Tanh;
    else if (name == "abs") fn = FnOp::Abs;
    else if (name == "min") { fn = FnOp::Min; arity = 2; }
    else if (name == "max") { fn = FnOp::Max; arity = 2; }
    else fail(start, "unknown identifier '" + name + "'");
    if (!consume('(')) fail(pos, "expected '(' after '" + name + "'");
    ExprPtr a = parse_expr();
    ExprPtr b;
    if (arity == 2) {
      if (!consume(',')) fail(pos, "expected ',' in '" + name + "'");
      b = parse_expr();
    }
    if (!consume(')')) fail(pos, "expected ')'");
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Call;
    n->fn = fn;
    n->a = a;
    n->b = b;
    return fold(n);
  }
};

int precedence_level(const ExprNode& n) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::Const: return (n.value < 0.0) ? 2 : 5;  // negative literal prints like a negation
    case K::Time:
    case K::Call: return 5;
    case K::Pow: return 4;
    case K::Neg: return 3;
    case K::Binary: return (n.bin == BinOp::Mul || n.bin == BinOp::Div) ? 2 : 1;
  }
  return 5;
}

void print_node(const ExprNode& n, std::ostream& os);

void print_child(const ExprPtr& c, int min_level, std::ostream& os) {
  const bool parens = precedence_level(*c) < min_level;
  if (parens) os << '(';
  print_node(*c, os);
  if (parens) os << ')';
}

void print_node(const ExprNode& n, std::ostream& os) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::Const: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", n.value);
      os << buf;
      return;
    }
    case K::Time: os << 't'; return;
    case K::Neg:
      os << '-';
      print_child(n.a, 3, os);
      return;
    case K::Binary: {
      const int lvl = precedence_level(n);
      print_child(n.a, lvl, os);
      switch (n.bin) {
        case BinOp::Add: os << " + "; break;
        case BinOp::Sub: os << " - "; break;
        case BinOp::Mul: os << "*"; break;
        case BinOp::Div: os << "/"; break;
      }
      // Left-associative: require strictly higher level on the right.
      print_child(n.b, lvl + 1, os);
      return;
    }
    case K::Pow:
      print_child(n.a, 5, os);
      os << '^';
      if (n.exponent < 0) os << '(' << n.exponent << ')';
      else os << n.exponent;
      return;
    case K::Call: {
      switch (n.fn) {
        case FnOp::Sin: os << "sin"; break;
        case FnOp::Cos: os << "cos"; break;
        case FnOp::Exp: os << "exp"; break;
        case FnOp::Tanh: os << "tanh"; break;
        case FnOp::Abs: os << "abs"; break;
        case FnOp::Min: os << "min"; break;
        case FnOp::Max: os << "max"; break;
      }
      os << '(';
      print_node(*n.a, os);
      if (n.b) {
        os << ", ";
        print_node(*n.b, os);
      }
      os << ')';
      return;
    }
  }
}

bool same_node(const ExprPtr& x, const ExprPtr& y) {
  if (!x || !y) return !x && !y;
  if (x->kind != y->kind) return false;
  using K = ExprNode::Kind;
  switch (x->kind) {
    case K::Const: return x->value == y->value;
    case K::Time: return true;
    case K::Neg: return same_node(x->a, y->a);
    case K::Binary: return x->bin == y->bin && same_node(x->a, y->a) && same_node(x->b, y->b);
    case K::Pow: return x->exponent == y->exponent && same_node(x->a, y->a);
    case K::Call: return x->fn == y->fn && same_node(x->a, y->a) && same_node(x->b, y->b);
  }
  return false;
}

}  // namespace

TimeFn TimeFn::parse(const std::string& text) {
  Parser p(text);
  ExprPtr root = p.parse_expr();
  if (!p.at_end()) p.fail(p.pos, "trailing input");
  return TimeFn(std::move(root));
}

TimeFn TimeFn::constant(double v) { return TimeFn(make_const(v)); }

double TimeFn::eval(double t) const {
  if (!root_) throw EvalError("empty expression");
  return eval_node(*root_, t);
}

bool TimeFn::is_constant() const { return root_ && root_->kind == ExprNode::Kind::Const; }

std::string TimeFn::to_string() const {
  if (!root_) return "";
  std::ostringstream os;
  print_node(*root_, os);
  return os.str();
}

bool TimeFn::same_structure(const TimeFn& other) const { return same_node(root_, other.root_); }

BoundEstimate estimate_bounds(const TimeFn& f, double window_lo, double window_hi, int samples) {
  if (samples < 2) throw ArgError("estimate_bounds: samples must be >= 2");
  if (!(window_lo < window_hi)) throw ArgError("estimate_bounds: empty window");

  const bool has_lo = f.declared_inf.has_value();
  const bool has_hi = f.declared_sup.has_value();
  const double dlo = has_lo ? *f.declared_inf : 0.0;
  const double dhi = has_hi ? *f.declared_sup : 0.0;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const int eff_samples = f.is_constant() ? 2 : samples;
  const double step = (window_hi - window_lo) / static_cast<double>(eff_samples - 1);
  for (int k = 0; k < eff_samples; ++k) {
    const double t = (k == eff_samples - 1) ? window_hi : window_lo + step * k;
    const double v = f.eval(t);
    if (has_lo && v < dlo - 1e-12)
      throw BoundsError(t, "declared lower bound " + format_double(dlo) +
                               " violated by value " + format_double(v) + " at t=" +
                               format_double(t));
    if (has_hi && v > dhi + 1e-12)
      throw BoundsError(t, "declared upper bound " + format_double(dhi) +
                               " violated by value " + format_double(v) + " at t=" +
                               format_double(t));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  BoundEstimate out;
  if (has_lo && has_hi) {
    out.inf = dlo;
    out.sup = dhi;
    out.source = BoundEstimate::Source::Declared;
  } else {
    out.inf = has_lo ? dlo : lo;
    out.sup = has_hi ? dhi : hi;
    out.source = BoundEstimate::Source::Sampled;
  }
  return out;
}

}  // namespace lvfa
