#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <system_error>

#include "diffpass/expr/expr.hpp"

namespace diffpass::expr {

ParseError::ParseError(const std::string& message, std::size_t offset, std::vector<std::string> expected)
    : InvalidArgument([&] {
        std::string what = message + " at offset " + std::to_string(offset);
        if (!expected.empty()) {
          what += " (expected ";
          for (std::size_t k = 0; k < expected.size(); ++k) what += (k ? ", " : "") + expected[k];
          what += ")";
        }
        return what;
      }()),
      message_(message),
      offset_(offset),
      expected_(std::move(expected)) {
  std::sort(expected_.begin(), expected_.end());
}

EvalError::EvalError(const std::string& message, std::size_t offset)
    : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

constexpr int kMaxDepth = 200;

struct FuncInfo {
  std::string_view name;
  Func func;
  std::size_t arity;
};

constexpr FuncInfo kFuncs[] = {
    {"sin", Func::Sin, 1},   {"cos", Func::Cos, 1},   {"tan", Func::Tan, 1},     {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},   {"sqrt", Func::Sqrt, 1}, {"abs", Func::Abs, 1},     {"tanh", Func::Tanh, 1},
    {"atan2", Func::Atan2, 2}, {"min", Func::Min, 2}, {"max", Func::Max, 2},
};

const FuncInfo* find_func(std::string_view name) {
  for (const auto& f : kFuncs)
    if (f.name == name) return &f;
  return nullptr;
}

const std::vector<std::string> kOperand = {"number", "identifier", "'('", "'-'"};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    NodePtr root = parse_expr();
    skip_ws();
    if (pos_ < text_.size())
      throw ParseError("unexpected character '" + printable(text_[pos_]) + "'", pos_,
                       {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
    return root;
  }

 private:
  static std::string printable(char c) {
    auto u = static_cast<unsigned char>(c);
    if (std::isprint(u)) return std::string(1, c);
    char buf[8];
    std::snprintf(buf, sizeof buf, "\\x%02x", u);
    return buf;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxDepth) throw ParseError("expression nested too deeply", p.pos_, {});
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  static NodePtr make(Kind kind, std::size_t offset, std::vector<NodePtr> args = {}) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->offset = offset;
    n->args = std::move(args);
    return n;
  }

  NodePtr parse_expr() {
    DepthGuard guard(*this);
    NodePtr lhs = parse_term();
    while (true) {
      skip_ws();
      if (pos_ >= text_.size()) return lhs;
      char c = text_[pos_];
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      NodePtr rhs = parse_term();
      std::size_t off = lhs->offset;
      lhs = make(c == '+' ? Kind::Add : Kind::Sub, off, {lhs, rhs});
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (true) {
      skip_ws();
      if (pos_ >= text_.size()) return lhs;
      char c = text_[pos_];
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      NodePtr rhs = parse_unary();
      std::size_t off = lhs->offset;
      lhs = make(c == '*' ? Kind::Mul : Kind::Div, off, {lhs, rhs});
    }
  }

  NodePtr parse_unary() {
    DepthGuard guard(*this);
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '-') {
      std::size_t off = pos_++;
      return make(Kind::Negate, off, {parse_unary()});
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (peek('^')) {
      ++pos_;
      NodePtr exponent = parse_unary();
      return make(Kind::Pow, base->offset, {base, exponent});
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_, kOperand);
    char c = text_[pos_];
    auto uc = static_cast<unsigned char>(c);
    if (std::isdigit(uc) || c == '.') return parse_number();
    if (std::isalpha(uc) || c == '_') return parse_identifier();
    if (c == '(') {
      DepthGuard guard(*this);
      ++pos_;
      NodePtr inner = parse_expr();
      if (!peek(')')) throw_expected("expected ')'", {"')'", "'+'", "'-'", "'*'", "'/'", "'^'"});
      ++pos_;
      return inner;
    }
    throw ParseError("unexpected character '" + printable(c) + "'", pos_, kOperand);
  }

  [[noreturn]] void throw_expected(const std::string& msg, std::vector<std::string> expected) {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_, std::move(expected));
    throw ParseError(msg, pos_, std::move(expected));
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    std::size_t p = pos_;
    auto digit = [&](std::size_t k) { return k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k])); };
    bool any = false;
    while (digit(p)) {
      ++p;
      any = true;
    }
    if (p < text_.size() && text_[p] == '.') {
      ++p;
      while (digit(p)) {
        ++p;
        any = true;
      }
    }
    if (!any) throw ParseError("malformed number", start, {"digit"});
    if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (!digit(q)) throw ParseError("malformed exponent", q, {"digit"});
      while (digit(q)) ++q;
      p = q;
    }
    double value = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + p, value);
    if (res.ec == std::errc::result_out_of_range || !std::isfinite(value))
      throw ParseError("number out of range", start, {});
    if (res.ec != std::errc() || res.ptr != text_.data() + p) throw ParseError("malformed number", start, {"digit"});
    pos_ = p;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = value;
    n->offset = start;
    return n;
  }

  NodePtr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (peek('(')) {
      const FuncInfo* info = find_func(name);
      if (info == nullptr) throw ParseError("unknown function '" + name + "'", start, {});
      DepthGuard guard(*this);
      ++pos_;
      std::vector<NodePtr> args;
      args.push_back(parse_expr());
      while (peek(',')) {
        ++pos_;
        args.push_back(parse_expr());
      }
      if (!peek(')')) throw_expected("expected ')' or ','", {"')'", "','", "'+'", "'-'", "'*'", "'/'", "'^'"});
      if (args.size() != info->arity)
        throw ParseError(name + " takes " + std::to_string(info->arity) + " argument(s), got " +
                             std::to_string(args.size()),
                         start, {});
      ++pos_;
      auto n = make(Kind::Call, start, std::move(args));
      std::const_pointer_cast<Node>(n)->func = info->func;
      return n;
    }
    if (find_func(name) != nullptr) throw ParseError("function '" + name + "' needs an argument list", pos_, {"'('"});
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->name = std::move(name);
    n->offset = start;
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::Add:
    case Kind::Sub:
      return 1;
    case Kind::Mul:
    case Kind::Div:
      return 2;
    case Kind::Negate:
      return 3;
    case Kind::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const Node& n, std::string& out) {
  auto wrap = [&](const Node& child, bool parens) {
    if (parens) out += '(';
    print_node(child, out);
    if (parens) out += ')';
  };
  switch (n.kind) {
    case Kind::Constant:
      out += format_number(n.value);
      return;
    case Kind::Variable:
      out += n.name;
      return;
    case Kind::Negate:
      out += '-';
      wrap(*n.args[0], precedence(*n.args[0]) < 3);
      return;
    case Kind::Pow:
      wrap(*n.args[0], precedence(*n.args[0]) <= 4);
      out += '^';
      wrap(*n.args[1], precedence(*n.args[1]) < 3);
      return;
    case Kind::Call:
      out += func_name(n.func);
      out += '(';
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        if (k) out += ", ";
        print_node(*n.args[k], out);
      }
      out += ')';
      return;
    default: {
      int p = precedence(n);
      const char* op = n.kind == Kind::Add ? " + " : n.kind == Kind::Sub ? " - " : n.kind == Kind::Mul ? "*" : "/";
      wrap(*n.args[0], precedence(*n.args[0]) < p);
      out += op;
      wrap(*n.args[1], precedence(*n.args[1]) <= p);
      return;
    }
  }
}

bool equal_node(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case Kind::Constant:
      if (a.value != b.value) return false;
      break;
    case Kind::Variable:
      if (a.name != b.name) return false;
      break;
    case Kind::Call:
      if (a.func != b.func) return false;
      break;
    default:
      break;
  }
  for (std::size_t k = 0; k < a.args.size(); ++k)
    if (!equal_node(*a.args[k], *b.args[k])) return false;
  return true;
}

void collect(const Node& n, std::set<std::string>& out) {
  if (n.kind == Kind::Variable) out.insert(n.name);
  for (const auto& a : n.args) collect(*a, out);
}

}  // namespace

Expr parse(std::string_view text) { return Expr(Parser(text).parse_all()); }

std::string print(const Expr& e) {
  std::string out;
  if (!e.empty()) print_node(e.root(), out);
  return out;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return equal_node(a.root(), b.root());
}

std::set<std::string> variables(const Expr& e) {
  std::set<std::string> out;
  if (!e.empty()) collect(e.root(), out);
  return out;
}

std::string_view func_name(Func f) {
  for (const auto& info : kFuncs)
    if (info.func == f) return info.name;
  return "?";
}

}  // namespace diffpass::expr
