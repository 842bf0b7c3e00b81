#include "diffpass/systems/signal.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>

#include "diffpass/numerics/dual.hpp"

namespace diffpass::systems {

using numerics::Ad;
using numerics::Ad2;

Signal Signal::zero() {
  Signal s{Raw{}};
  s.kind_ = Kind::Zero;
  s.v_ = [](double) { return 0.0; };
  s.d1_ = s.v_;
  s.d2_ = s.v_;
  return s;
}

Signal Signal::constant(double c) {
  Signal s{Raw{}};
  s.kind_ = Kind::Constant;
  s.v_ = [c](double) { return c; };
  s.d1_ = [](double) { return 0.0; };
  s.d2_ = s.d1_;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  s.text_ = buf;
  return s;
}

Signal Signal::sampled(std::vector<double> times, std::vector<double> vals) {
  if (times.size() != vals.size() || times.size() < 2)
    throw InvalidArgument("sampled signal needs at least two (time, value) pairs of equal length");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw InvalidArgument("sampled signal times must be strictly increasing");
  auto data = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>(std::move(times), std::move(vals));
  auto segment = [data](double t) {
    const auto& ts = data->first;
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t k = it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
    return std::min(k, ts.size() - 2);
  };
  Signal s{Raw{}};
  s.kind_ = Kind::Sampled;
  s.v_ = [data, segment](double t) {
    std::size_t k = segment(t);
    const auto& [ts, vs] = *data;
    double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
    return vs[k] + w * (vs[k + 1] - vs[k]);
  };
  s.d1_ = [data, segment](double t) {
    std::size_t k = segment(t);
    const auto& [ts, vs] = *data;
    return (vs[k + 1] - vs[k]) / (ts[k + 1] - ts[k]);
  };
  s.d2_ = [](double) { return 0.0; };
  s.lo_ = data->first.front();
  s.hi_ = data->first.back();
  s.text_ = "sampled";
  return s;
}

Signal Signal::analytic(const expr::Expr& e) {
  for (const auto& name : expr::variables(e))
    if (name != "t") throw InvalidArgument("analytic signal may only depend on t, found '" + name + "'");
  auto bound = std::make_shared<expr::BoundExpr>(e, std::vector<std::string>{"t"});
  Signal s{Raw{}};
  s.kind_ = Kind::Analytic;
  s.v_ = [bound](double t) { return bound->eval<double>(std::span<const double>(&t, 1)); };
  s.d1_ = [bound](double t) {
    Ad x(t, 1.0);
    return bound->eval<Ad>(std::span<const Ad>(&x, 1)).deriv;
  };
  s.d2_ = [bound](double t) {
    Ad2 x(Ad(t, 1.0), Ad(1.0, 0.0));
    return bound->eval<Ad2>(std::span<const Ad2>(&x, 1)).deriv.deriv;
  };
  s.text_ = expr::print(e);
  return s;
}

Signal Signal::analytic(const std::string& text) { return analytic(expr::parse(text)); }

Signal Signal::closure(std::function<double(double)> value, std::function<double(double)> d1,
                       std::function<double(double)> d2) {
  if (!value) throw InvalidArgument("closure signal needs a value function");
  Signal s{Raw{}};
  s.kind_ = Kind::Closure;
  s.v_ = std::move(value);
  s.d1_ = std::move(d1);
  s.d2_ = std::move(d2);
  s.text_ = "closure";
  return s;
}

double Signal::value(double t) const { return v_(t); }

double Signal::deriv(double t) const {
  if (!d1_) throw InvalidArgument("signal '" + describe() + "' has no first derivative");
  return d1_(t);
}

double Signal::deriv2(double t) const {
  if (!d2_) throw InvalidArgument("signal '" + describe() + "' has no second derivative");
  return d2_(t);
}

std::string Signal::describe() const { return kind_ == Kind::Zero ? "0" : text_; }

SignalVec zero_signals(std::size_t q) { return SignalVec(q, Signal::zero()); }

std::vector<double> values(const SignalVec& s, double t) {
  std::vector<double> out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = s[k].value(t);
  return out;
}

}  // namespace diffpass::systems
