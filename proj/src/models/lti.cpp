#include "diffpass/models/models.hpp"

namespace diffpass::models {

DynSystem lti(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d) {
  const std::size_t n = a.rows(), q = b.cols();
  if (a.cols() != n || n == 0) throw DimensionError("A must be square and nonempty, got " + a.shape());
  if (b.rows() != n) throw DimensionError("B must have " + std::to_string(n) + " rows, got " + b.shape());
  if (c.rows() != q || c.cols() != n)
    throw DimensionError("C must be " + std::to_string(q) + "x" + std::to_string(n) + ", got " + c.shape());
  const bool has_d = d.rows() != 0 || d.cols() != 0;
  if (has_d && (d.rows() != q || d.cols() != q))
    throw DimensionError("D must be " + std::to_string(q) + "x" + std::to_string(q) + ", got " + d.shape());

  DynSystem s;
  s.n = n;
  s.q = q;
  s.f = numerics::VecField::generic([a](double, auto x) {
    using T = typename decltype(x)::value_type;
    return numerics::promote<T>(a) * x;
  });
  s.g = numerics::constant_time_field(b);
  s.h = numerics::VecField::generic([c](double, auto x) {
    using T = typename decltype(x)::value_type;
    return numerics::promote<T>(c) * x;
  });
  if (has_d) s.i = numerics::constant_time_field(d);
  for (std::size_t k = 0; k < n; ++k) s.state_names.push_back("x" + std::to_string(k + 1));
  return s;
}

}  // namespace diffpass::models
