#include <algorithm>
#include <cmath>

#include "diffpass/expr/expr.hpp"
#include "diffpass/numerics/dual.hpp"

namespace diffpass::expr {

namespace {

using numerics::Ad;
using numerics::Ad2;
using numerics::Ad3;
using numerics::primal;

constexpr int kMaxIntegerPower = 64;

/// Integer literal exponent (optionally negated), or false.
bool integer_literal(const Node& n, int& out) {
  const Node* c = &n;
  int sign = 1;
  if (c->kind == Kind::Negate) {
    sign = -1;
    c = c->args[0].get();
  }
  if (c->kind != Kind::Constant) return false;
  double v = c->value;
  if (v != std::floor(v) || v > kMaxIntegerPower) return false;
  out = sign * static_cast<int>(v);
  return true;
}

void flatten(const Node& n, const std::vector<std::string>& names, std::vector<BoundExpr::Op>& ops) {
  BoundExpr::Op op{n.kind, n.func, n.value, 0, 0, false, n.offset};
  if (n.kind == Kind::Variable) {
    auto it = std::find(names.begin(), names.end(), n.name);
    if (it == names.end()) throw EvalError("unbound variable '" + n.name + "'", n.offset);
    op.slot = static_cast<std::size_t>(it - names.begin());
  } else if (n.kind == Kind::Pow && integer_literal(*n.args[1], op.ipow)) {
    op.integer_power = true;
    flatten(*n.args[0], names, ops);
    ops.push_back(op);
    return;
  }
  for (const auto& a : n.args) flatten(*a, names, ops);
  ops.push_back(op);
}

template <class T>
T apply(const BoundExpr::Op& op, const T* a) {
  using std::abs;
  using std::atan2;
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  using std::tan;
  using std::tanh;
  switch (op.func) {
    case Func::Sin:
      return sin(a[0]);
    case Func::Cos:
      return cos(a[0]);
    case Func::Tan:
      return tan(a[0]);
    case Func::Exp:
      return exp(a[0]);
    case Func::Log:
      if (!(primal(a[0]) > 0.0)) throw EvalError("log of a non-positive value", op.offset);
      return log(a[0]);
    case Func::Sqrt:
      if (!(primal(a[0]) >= 0.0)) throw EvalError("sqrt of a negative value", op.offset);
      return sqrt(a[0]);
    case Func::Abs:
      return abs(a[0]);
    case Func::Tanh:
      return tanh(a[0]);
    case Func::Atan2:
      return atan2(a[0], a[1]);
    case Func::Min:
      return primal(a[1]) < primal(a[0]) ? a[1] : a[0];
    case Func::Max:
      return primal(a[1]) > primal(a[0]) ? a[1] : a[0];
  }
  return a[0];
}

}  // namespace

BoundExpr::BoundExpr(const Expr& e, const std::vector<std::string>& names) : expr_(e) {
  if (e.empty()) throw InvalidArgument("cannot bind an empty expression");
  flatten(e.root(), names, ops_);
}

template <class T>
T BoundExpr::eval(std::span<const T> vars) const {
  using std::exp;
  using std::log;
  std::vector<T> stack;
  stack.reserve(ops_.size());
  for (const Op& op : ops_) {
    switch (op.kind) {
      case Kind::Constant:
        stack.emplace_back(op.value);
        break;
      case Kind::Variable:
        if (op.slot >= vars.size()) throw EvalError("variable slot out of range", op.offset);
        stack.push_back(vars[op.slot]);
        break;
      case Kind::Negate:
        stack.back() = -stack.back();
        break;
      case Kind::Add:
      case Kind::Sub:
      case Kind::Mul:
      case Kind::Div: {
        T b = stack.back();
        stack.pop_back();
        T& a = stack.back();
        if (op.kind == Kind::Add) a = a + b;
        else if (op.kind == Kind::Sub) a = a - b;
        else if (op.kind == Kind::Mul) a = a * b;
        else {
          if (primal(b) == 0.0) throw EvalError("division by zero", op.offset);
          a = a / b;
        }
        break;
      }
      case Kind::Pow: {
        if (op.integer_power) {
          if (op.ipow < 0 && primal(stack.back()) == 0.0) throw EvalError("zero raised to a negative power", op.offset);
          stack.back() = numerics::ipow(stack.back(), op.ipow);
          break;
        }
        T b = stack.back();
        stack.pop_back();
        T& a = stack.back();
        if (!(primal(a) > 0.0)) throw EvalError("non-integer power of a non-positive base", op.offset);
        a = exp(b * log(a));
        break;
      }
      case Kind::Call: {
        std::size_t arity = (op.func == Func::Atan2 || op.func == Func::Min || op.func == Func::Max) ? 2 : 1;
        T* args = stack.data() + (stack.size() - arity);
        T r = apply<T>(op, args);
        stack.resize(stack.size() - arity);
        stack.push_back(r);
        break;
      }
    }
  }
  return stack.back();
}

template <class T>
T eval(const Expr& e, const std::map<std::string, T>& env) {
  std::vector<std::string> names;
  std::vector<T> values;
  for (const auto& [k, v] : env) {
    names.push_back(k);
    values.push_back(v);
  }
  BoundExpr bound(e, names);
  return bound.eval<T>(values);
}

template double BoundExpr::eval<double>(std::span<const double>) const;
template Ad BoundExpr::eval<Ad>(std::span<const Ad>) const;
template Ad2 BoundExpr::eval<Ad2>(std::span<const Ad2>) const;
template Ad3 BoundExpr::eval<Ad3>(std::span<const Ad3>) const;

template double eval<double>(const Expr&, const std::map<std::string, double>&);
template Ad eval<Ad>(const Expr&, const std::map<std::string, Ad>&);
template Ad2 eval<Ad2>(const Expr&, const std::map<std::string, Ad2>&);
template Ad3 eval<Ad3>(const Expr&, const std::map<std::string, Ad3>&);

}  // namespace diffpass::expr
