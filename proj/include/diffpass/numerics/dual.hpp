#pragma once

// Forward-mode dual numbers. A Dual<T> carries a value and one directional
// derivative; nesting (Dual<Dual<double>>) gives mixed second derivatives,
// which is how Hessians and derivatives of derived maps are obtained.

#include <cmath>
#include <type_traits>

namespace diffpass::numerics {

template <class T>
struct Dual {
  T value{};
  T deriv{};

  constexpr Dual() = default;
  constexpr Dual(double c) : value(c), deriv(0.0) {}  // NOLINT: constants promote implicitly
  constexpr Dual(T v, T d) : value(v), deriv(d) {}

  template <class U = T>
    requires(!std::is_same_v<U, double>)
  constexpr Dual(const T& v) : value(v), deriv(0.0) {}  // NOLINT

  constexpr Dual& operator+=(const Dual& o) {
    value += o.value;
    deriv += o.deriv;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    value -= o.value;
    deriv -= o.deriv;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    deriv = deriv * o.value + value * o.deriv;
    value *= o.value;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    *this = *this / o;
    return *this;
  }

  friend constexpr Dual operator-(const Dual& a) { return {-a.value, -a.deriv}; }
  friend constexpr Dual operator+(const Dual& a) { return a; }

  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.deriv + b.deriv}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.deriv - b.deriv}; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.value * b.value, a.deriv * b.value + a.value * b.deriv};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    T inv = T(1.0) / b.value;
    T q = a.value * inv;
    return {q, (a.deriv - q * b.deriv) * inv};
  }

  friend constexpr Dual operator+(const Dual& a, double b) { return {a.value + b, a.deriv}; }
  friend constexpr Dual operator+(double a, const Dual& b) { return {a + b.value, b.deriv}; }
  friend constexpr Dual operator-(const Dual& a, double b) { return {a.value - b, a.deriv}; }
  friend constexpr Dual operator-(double a, const Dual& b) { return {a - b.value, -b.deriv}; }
  friend constexpr Dual operator*(const Dual& a, double b) { return {a.value * b, a.deriv * b}; }
  friend constexpr Dual operator*(double a, const Dual& b) { return {a * b.value, a * b.deriv}; }
  friend constexpr Dual operator/(const Dual& a, double b) { return {a.value / b, a.deriv / b}; }
  friend constexpr Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
};

using Ad = Dual<double>;
using Ad2 = Dual<Ad>;
using Ad3 = Dual<Ad2>;

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

/// Innermost real value of a (possibly nested) dual.
constexpr double primal(double x) { return x; }
template <class T>
constexpr double primal(const Dual<T>& x) {
  return primal(x.value);
}

/// True when every component of a (possibly nested) dual is finite.
inline bool all_finite(double x) { return std::isfinite(x); }
template <class T>
bool all_finite(const Dual<T>& x) {
  return all_finite(x.value) && all_finite(x.deriv);
}

template <class T>
Dual<T> sin(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return {sin(x.value), cos(x.value) * x.deriv};
}

template <class T>
Dual<T> cos(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return {cos(x.value), -sin(x.value) * x.deriv};
}

template <class T>
Dual<T> tan(const Dual<T>& x) {
  using std::tan;
  T t = tan(x.value);
  return {t, (T(1.0) + t * t) * x.deriv};
}

template <class T>
Dual<T> exp(const Dual<T>& x) {
  using std::exp;
  T e = exp(x.value);
  return {e, e * x.deriv};
}

template <class T>
Dual<T> log(const Dual<T>& x) {
  using std::log;
  return {log(x.value), x.deriv / x.value};
}

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  T r = sqrt(x.value);
  // an unseeded direction stays exactly zero, even at the branch point
  if constexpr (std::is_same_v<T, double>)
    if (x.deriv == 0.0) return {r, 0.0};
  return {r, x.deriv / (2.0 * r)};
}

template <class T>
Dual<T> tanh(const Dual<T>& x) {
  using std::tanh;
  T th = tanh(x.value);
  return {th, (T(1.0) - th * th) * x.deriv};
}

// sign(0) is taken as 0, so |x| has a zero derivative at the kink.
template <class T>
Dual<T> abs(const Dual<T>& x) {
  double p = primal(x.value);
  if (p > 0.0) return x;
  if (p < 0.0) return -x;
  return {x.value, T(0.0)};
}

template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  T r2 = x.value * x.value + y.value * y.value;
  return {atan2(y.value, x.value), (x.value * y.deriv - y.value * x.deriv) / r2};
}

/// Integer power by repeated squaring; negative exponents divide.
template <class T>
T ipow(const T& base, int n) {
  if (n < 0) return T(1.0) / ipow(base, -n);
  T result(1.0);
  T b = base;
  while (n > 0) {
    if (n & 1) result = result * b;
    n >>= 1;
    if (n > 0) b = b * b;
  }
  return result;
}

}  // namespace diffpass::numerics
