#pragma once

// Arithmetic expressions used to define model maps in config files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?            right associative
//   primary := number | ident | func '(' args ')' | '(' expr ')'
//
// There is no implicit multiplication; "2x" is a syntax error.

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffpass/errors.hpp"

namespace diffpass::expr {

class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& message, std::size_t offset, std::vector<std::string> expected);

  [[nodiscard]] std::size_t offset() const { return offset_; }
  /// Sorted names of the tokens that would have been accepted at offset().
  [[nodiscard]] const std::vector<std::string>& expected() const { return expected_; }
  [[nodiscard]] const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Unbound variable, domain violation or division by zero during evaluation.
class EvalError : public Error {
 public:
  EvalError(const std::string& message, std::size_t offset);
  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class Kind { Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh, Atan2, Min, Max };

struct Node {
  Kind kind = Kind::Constant;
  double value = 0.0;    // Constant
  std::string name;      // Variable
  Func func = Func::Sin;  // Call
  std::vector<std::shared_ptr<const Node>> args;
  std::size_t offset = 0;  ///< byte offset of the node's first token
};

using NodePtr = std::shared_ptr<const Node>;

/// Immutable parsed expression.
class Expr {
 public:
  Expr() = default;
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  [[nodiscard]] const Node& root() const { return *root_; }
  [[nodiscard]] const NodePtr& root_ptr() const { return root_; }
  [[nodiscard]] bool empty() const { return !root_; }

 private:
  NodePtr root_;
};

Expr parse(std::string_view text);

/// Canonical form: minimal parentheses, constants at 17 significant digits.
std::string print(const Expr& e);

/// Structural equality, ignoring source offsets.
bool equal(const Expr& a, const Expr& b);

std::set<std::string> variables(const Expr& e);

std::string_view func_name(Func f);

/// An expression whose variables are resolved to positions in a fixed list.
/// Evaluation is a post-order sweep over a flattened node array.
class BoundExpr {
 public:
  BoundExpr() = default;
  /// Throws EvalError (at the variable's offset) for names not in `names`.
  BoundExpr(const Expr& e, const std::vector<std::string>& names);

  template <class T>
  T eval(std::span<const T> vars) const;

  [[nodiscard]] const Expr& expr() const { return expr_; }

  struct Op {
    Kind kind;
    Func func;
    double value;
    std::size_t slot;  ///< variable index, or small-integer exponent flag
    int ipow;
    bool integer_power;
    std::size_t offset;
  };

 private:
  Expr expr_;
  std::vector<Op> ops_;
};

/// Map-based evaluation; an unbound variable raises EvalError at its offset.
template <class T>
T eval(const Expr& e, const std::map<std::string, T>& env);

}  // namespace diffpass::expr
