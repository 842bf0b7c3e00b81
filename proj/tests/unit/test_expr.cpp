#include <cmath>
#include <random>

#include "diffpass/expr/expr.hpp"
#include "diffpass/numerics/dual.hpp"
#include "doctest.h"

using namespace diffpass;
using namespace diffpass::expr;
using numerics::Ad;
using numerics::Ad2;

namespace {

std::string random_expr(std::mt19937_64& rng, int depth) {
  static const char* vars[] = {"x", "y", "q_c", "w1"};
  static const char* unary_funcs[] = {"sin", "cos", "tanh", "exp", "abs"};
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  switch (pick(rng)) {
    case 0:
      return std::to_string(std::uniform_int_distribution<int>(0, 9)(rng)) + ".25";
    case 1:
      return vars[std::uniform_int_distribution<int>(0, 3)(rng)];
    case 2:
      return random_expr(rng, depth - 1) + " + " + random_expr(rng, depth - 1);
    case 3:
      return random_expr(rng, depth - 1) + " - " + random_expr(rng, depth - 1);
    case 4:
      return random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1);
    case 5:
      return "(" + random_expr(rng, depth - 1) + ")/(" + random_expr(rng, depth - 1) + ")";
    case 6:
      return "-" + random_expr(rng, depth - 1);
    case 7:
      return "(" + random_expr(rng, depth - 1) + ")^" + random_expr(rng, 0);
    case 8:
      return std::string(unary_funcs[std::uniform_int_distribution<int>(0, 4)(rng)]) + "(" +
             random_expr(rng, depth - 1) + ")";
    default:
      return "max(" + random_expr(rng, depth - 1) + ", " + random_expr(rng, depth - 1) + ")";
  }
}

double eval_at(const std::string& text, double x) { return eval<double>(parse(text), {{"x", x}}); }

Ad eval_dual(const std::string& text, double x) { return eval<Ad>(parse(text), {{"x", Ad(x, 1.0)}}); }

}  // namespace

TEST_SUITE("expr") {
  TEST_CASE("grammar-forced shapes") {
    Expr e = parse("x1 + 2*x2");
    REQUIRE(e.root().kind == Kind::Add);
    CHECK(e.root().args[0]->kind == Kind::Variable);
    CHECK(e.root().args[0]->name == "x1");
    const Node& mul = *e.root().args[1];
    REQUIRE(mul.kind == Kind::Mul);
    CHECK(mul.args[0]->kind == Kind::Constant);
    CHECK(mul.args[0]->value == 2.0);
    CHECK(mul.args[1]->name == "x2");

    Expr p = parse("x1 + x2*x3");
    REQUIRE(p.root().kind == Kind::Add);
    CHECK(p.root().args[1]->kind == Kind::Mul);
  }

  TEST_CASE("precedence and associativity") {
    CHECK(equal(parse("a - b - c"), parse("(a - b) - c")));
    CHECK(equal(parse("a / b / c"), parse("(a / b) / c")));
    CHECK(equal(parse("a ^ b ^ c"), parse("a ^ (b ^ c)")));
    CHECK(equal(parse("-x^2"), parse("-(x^2)")));
    CHECK(equal(parse("2^-x"), parse("2^(-x)")));
    CHECK(equal(parse("-a*b"), parse("(-a)*b")));
    CHECK(eval_at("-x^2", 3.0) == -9.0);
    CHECK(eval_at("2^3^2", 0.0) == doctest::Approx(512.0).epsilon(1e-14));
    CHECK(eval_at("8 - 4 - 2", 0.0) == 2.0);
  }

  TEST_CASE("syntax errors carry offsets and expected sets") {
    try {
      (void)parse("x1 +");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 4);
      CHECK(std::find(e.expected().begin(), e.expected().end(), "number") != e.expected().end());
    }
    try {
      (void)parse("2x");
      FAIL("implicit multiplication accepted");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 1);
    }
    CHECK_THROWS_AS((void)parse("foo(x)"), ParseError);
    CHECK_THROWS_AS((void)parse("sin(x, y)"), ParseError);
    CHECK_THROWS_AS((void)parse("atan2(x)"), ParseError);
    CHECK_THROWS_AS((void)parse("(x"), ParseError);
    CHECK_THROWS_AS((void)parse(""), ParseError);
    CHECK_THROWS_AS((void)parse("1e999"), ParseError);
    CHECK_THROWS_AS((void)parse("sin"), ParseError);
    CHECK_THROWS_AS((void)parse(std::string(500, '(') + "x" + std::string(500, ')')), ParseError);
    CHECK_NOTHROW((void)parse(" \t x\n*  2 "));
    CHECK_NOTHROW((void)parse("1.5e-3 + .5 + 2."));
  }

  TEST_CASE("dual evaluation") {
    Ad c = eval_dual("x^3", 2.0);
    CHECK(c.value == 8.0);
    CHECK(c.deriv == 12.0);
    Ad s = eval_dual("sin(x)", 0.0);
    CHECK(s.value == 0.0);
    CHECK(s.deriv == 1.0);
    Ad2 second = eval<Ad2>(parse("x^3"), {{"x", Ad2(Ad(2.0, 1.0), Ad(1.0, 0.0))}});
    CHECK(second.deriv.deriv == doctest::Approx(12.0));
  }

  TEST_CASE("RC law derivative matches a central difference") {
    const std::string mu = "q + q^3";
    Expr e = parse(mu);
    double q = 0.5;
    Ad d = eval<Ad>(e, {{"q", Ad(q, 1.0)}});
    double h = 1e-5;
    double fd = (eval<double>(e, {{"q", q + h}}) - eval<double>(e, {{"q", q - h}})) / (2 * h);
    CHECK(d.deriv == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(std::abs(d.deriv - fd) <= 1e-9);
  }

  TEST_CASE("every built-in matches central differences at second order") {
    struct Case {
      const char* text;
      double lo, hi;
    };
    const Case cases[] = {
        {"sin(x)", -3, 3},       {"cos(x)", -3, 3},        {"tan(x)", -1.2, 1.2},    {"exp(x)", -2, 2},
        {"log(x)", 0.2, 5},      {"sqrt(x)", 0.2, 5},      {"abs(x)", 0.1, 3},       {"abs(x)", -3, -0.1},
        {"tanh(x)", -3, 3},      {"atan2(x, 0.7)", -3, 3}, {"atan2(0.4, x)", 0.2, 3}, {"min(x, 0.3*x + 1)", -3, 3},
        {"max(x^2, 1)", 1.1, 3}, {"x^2.5", 0.2, 4},        {"x^-2", 0.3, 4},         {"2^x", -2, 2},
        {"x/(1 + x^2)", -3, 3},
    };
    std::mt19937_64 rng(17);
    for (const auto& c : cases) {
      std::uniform_real_distribution<double> ud(c.lo, c.hi);
      for (int k = 0; k < 20; ++k) {
        double x = ud(rng);
        double d = eval_dual(c.text, x).deriv;
        auto fd = [&](double h) { return (eval_at(c.text, x + h) - eval_at(c.text, x - h)) / (2 * h); };
        double e3 = std::abs(fd(1e-3) - d), e4 = std::abs(fd(1e-4) - d);
        INFO(c.text << " at " << x);
        // O(h^2): shrinking h tenfold shrinks the error a hundredfold, up to rounding
        CHECK(e4 <= 0.02 * e3 + 1e-9 * (1 + std::abs(d)));
        CHECK(e3 <= 1e-4 * (1 + std::abs(d)));
      }
    }
  }

  TEST_CASE("evaluation errors are located") {
    try {
      (void)eval_at("1 + log(x - 2)", 1.0);
      FAIL("expected EvalError");
    } catch (const EvalError& e) {
      CHECK(e.offset() == 4);
    }
    CHECK_THROWS_AS((void)eval_at("sqrt(x)", -1.0), EvalError);
    CHECK_THROWS_AS((void)eval_at("1/x", 0.0), EvalError);
    CHECK_THROWS_AS((void)eval_at("x^0.5", -1.0), EvalError);
    try {
      (void)eval<double>(parse("x + zz"), {{"x", 1.0}});
      FAIL("expected EvalError");
    } catch (const EvalError& e) {
      CHECK(e.offset() == 4);
    }
  }

  TEST_CASE("bound expressions follow the declared variable order") {
    BoundExpr b(parse("a - 2*b"), {"b", "a"});
    std::vector<double> v{1.0, 10.0};
    CHECK(b.eval<double>(v) == 8.0);
    CHECK(variables(parse("sin(x) + y*x")) == std::set<std::string>{"x", "y"});
  }

  TEST_CASE("parse . print . parse is the identity") {
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 2000; ++k) {
      std::string text = random_expr(rng, 5);
      Expr first = parse(text);
      std::string printed = print(first);
      Expr second = parse(printed);
      INFO(text << "  ->  " << printed);
      CHECK(equal(first, second));
      CHECK(print(second) == printed);
    }
    CHECK(print(parse("(a+b)*c")) == "(a + b)*c");
    CHECK(print(parse("a-(b-c)")) == "a - (b - c)");
    CHECK(print(parse("(a^b)^c")) == "(a^b)^c");
    CHECK(print(parse("0.1")) == "0.10000000000000001");
  }

  TEST_CASE("arbitrary bytes never crash the parser") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "x1y+-*/^().,e ae\tsincoexplgqrtmax0987_";
    int accepted = 0;
    for (int k = 0; k < 20000; ++k) {
      std::size_t len = std::uniform_int_distribution<std::size_t>(0, 24)(rng);
      std::string s(len, ' ');
      for (auto& c : s) {
        if (k % 2 == 0) c = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
        else c = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
      }
      try {
        (void)parse(s);
        ++accepted;
      } catch (const ParseError& e) {
        CHECK(e.offset() <= s.size());
      }
    }
    CHECK(accepted > 0);
  }
}
