#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "diffpass/expr/expr.hpp"

namespace diffpass::systems {

/// Scalar time signal t -> R with up to two derivatives.
class Signal {
 public:
  enum class Kind { Zero, Constant, Sampled, Analytic, Closure };

  Signal() : Signal(zero()) {}

  static Signal zero();
  static Signal constant(double c);
  /// Piecewise-linear interpolation of strictly increasing samples; the first
  /// derivative is the segment slope and the second derivative is zero.
  static Signal sampled(std::vector<double> times, std::vector<double> values);
  /// Expression in the variable `t`; derivatives by nested dual evaluation.
  static Signal analytic(const expr::Expr& e);
  static Signal analytic(const std::string& text);
  /// Caller-provided closures; missing derivatives raise when requested.
  static Signal closure(std::function<double(double)> value, std::function<double(double)> d1 = {},
                        std::function<double(double)> d2 = {});

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double value(double t) const;
  [[nodiscard]] double deriv(double t) const;
  [[nodiscard]] double deriv2(double t) const;
  [[nodiscard]] bool has_deriv2() const { return static_cast<bool>(d2_); }
  [[nodiscard]] bool defined_on(double t0, double t1) const { return t0 >= lo_ && t1 <= hi_; }
  [[nodiscard]] std::string describe() const;

 private:
  struct Raw {};
  explicit Signal(Raw) {}

  Kind kind_ = Kind::Zero;
  std::function<double(double)> v_, d1_, d2_;
  double lo_ = -std::numeric_limits<double>::infinity();
  double hi_ = std::numeric_limits<double>::infinity();
  std::string text_;
};

using SignalVec = std::vector<Signal>;

SignalVec zero_signals(std::size_t q);
std::vector<double> values(const SignalVec& s, double t);

}  // namespace diffpass::systems
