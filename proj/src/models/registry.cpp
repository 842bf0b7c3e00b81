#include <cmath>
#include <cstdio>
#include <functional>

#include "diffpass/models/models.hpp"

namespace diffpass::models {

namespace {

// Parameter table: defaults as text, overridden by key, then read back typed.
class Params {
 public:
  Params(std::string model, std::map<std::string, std::string> defaults)
      : model_(std::move(model)), values_(std::move(defaults)) {}

  void apply(const std::map<std::string, std::string>& overrides) {
    for (const auto& [k, v] : overrides) {
      auto it = values_.find(k);
      if (it == values_.end()) {
        std::string keys;
        for (const auto& [name, _] : values_) keys += (keys.empty() ? "" : ", ") + name;
        throw InvalidArgument("unknown parameter '" + k + "' for model " + model_ + " (accepted: " + keys + ")");
      }
      it->second = v;
    }
  }

  [[nodiscard]] double number(const std::string& k) const {
    const std::string& text = values_.at(k);
    try {
      double v = expr::eval<double>(expr::parse(text), {});
      if (!std::isfinite(v)) throw InvalidArgument("not finite");
      return v;
    } catch (const Error& e) {
      throw InvalidArgument("parameter " + k + " = '" + text + "' is not a constant number: " + e.what());
    }
  }

  [[nodiscard]] Signal signal(const std::string& k) const {
    try {
      return Signal::analytic(values_.at(k));
    } catch (const Error& e) {
      throw InvalidArgument("parameter " + k + " = '" + values_.at(k) + "' is not an expression in t: " + e.what());
    }
  }

  [[nodiscard]] expr::Expr expression(const std::string& k) const {
    try {
      return expr::parse(values_.at(k));
    } catch (const Error& e) {
      throw InvalidArgument("parameter " + k + " = '" + values_.at(k) + "' does not parse: " + e.what());
    }
  }

  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string model_;
  std::map<std::string, std::string> values_;
};

void timing(Demo& d, const Params& p) {
  d.t_final = p.number("t_final");
  d.dt = p.number("dt");
  if (!(d.t_final > 0.0) || !(d.dt > 0.0)) throw InvalidArgument("t_final and dt must be positive");
}

Demo rc_demo(const std::map<std::string, std::string>& overrides) {
  Params p("rc", {{"R", "1"},
                  {"mu", "q_c + q_c^3"},
                  {"q_lo", "-3"},
                  {"q_hi", "3"},
                  {"input", "0.5*sin(t)"},
                  {"q0_a", "1"},
                  {"q0_b", "-1"},
                  {"t_final", "20"},
                  {"dt", "1e-3"}});
  p.apply(overrides);
  RcParams rc;
  rc.R = p.number("R");
  rc.mu = p.expression("mu");
  rc.q_lo = p.number("q_lo");
  rc.q_hi = p.number("q_hi");
  Demo d;
  d.name = "rc";
  d.system = rc_circuit(rc);
  // the resistor dissipates exactly (1/R) dV W dV
  d.system.supply.output_gain = 1.0 / rc.R;
  d.u = {p.signal("input")};
  d.x0_a = {p.number("q0_a")};
  d.x0_b = {p.number("q0_b")};
  timing(d, p);
  d.params = p.values();
  return d;
}

Demo motor_demo(const std::map<std::string, std::string>& overrides) {
  Params p("motor", {{"R_r", "1"},
                     {"R_s", "1"},
                     {"L_r", "1"},
                     {"L_s", "1"},
                     {"L_l", "0.2"},
                     {"kappa_r", "0.5"},
                     {"kappa_s", "0.5"},
                     {"omega_r", "9"},
                     {"omega_s", "10"},
                     {"phi_ref_a", "1"},
                     {"phi_ref_b", "0"},
                     {"t_final", "10"},
                     {"dt", "1e-3"}});
  p.apply(overrides);
  MotorParams m;
  m.R_r = p.number("R_r");
  m.R_s = p.number("R_s");
  m.L_r = p.number("L_r");
  m.L_s = p.number("L_s");
  m.L_l = p.number("L_l");
  m.kappa_r = p.number("kappa_r");
  m.kappa_s = p.number("kappa_s");
  m.omega_r = p.signal("omega_r");
  m.omega_s = p.signal("omega_s");
  m.phi_r_ref_a = p.signal("phi_ref_a");
  m.phi_r_ref_b = p.signal("phi_ref_b");
  Demo d;
  d.name = "motor";
  timing(d, p);
  d.system = induction_motor_virtual(m);
  auto ff = motor_feedforward(m, d.t_final);
  d.u = ff.u_s;
  d.reference = {ff.phi_r_ref[0], ff.phi_r_ref[1], ff.phi_s_ref[0], ff.phi_s_ref[1]};
  d.feedforward_residual = ff.residual;
  d.x0_a = {ff.phi_r_ref[0].value(0.0), ff.phi_r_ref[1].value(0.0), ff.phi_s_ref[0].value(0.0),
            ff.phi_s_ref[1].value(0.0)};
  d.x0_b = {0.0, 0.0, 0.0, 0.0};
  d.params = p.values();
  return d;
}

Demo lti_demo(const std::map<std::string, std::string>& overrides) {
  Params p("lti", {{"a", "-1"},
                   {"b", "1"},
                   {"c", "1"},
                   {"input", "sin(t)"},
                   {"x0_a", "1"},
                   {"x0_b", "-1"},
                   {"t_final", "10"},
                   {"dt", "1e-3"}});
  p.apply(overrides);
  const double a = p.number("a"), b = p.number("b"), c = p.number("c");
  if (!(b * c > 0.0)) throw InvalidArgument("lti demo needs b * c > 0 for a positive supply weight");
  Demo d;
  d.name = "lti";
  d.system.system = lti(Matrix(1, 1, {a}), Matrix(1, 1, {b}), Matrix(1, 1, {c}));
  d.system.storage = dissipativity::constant_storage(Matrix::identity(1));
  // S' = a dx^2 + b dx du and dy W du = b dx du for W = b / c
  d.system.supply = dissipativity::constant_supply(Matrix(1, 1, {b / c}));
  d.system.supply.output_gain = std::max(0.0, -a / (b * c));
  d.system.name = "lti";
  d.u = {p.signal("input")};
  d.x0_a = {p.number("x0_a")};
  d.x0_b = {p.number("x0_b")};
  timing(d, p);
  d.params = p.values();
  return d;
}

}  // namespace

std::vector<std::string> demo_names() { return {"lti", "motor", "rc"}; }

Demo make_demo(const std::string& name, const std::map<std::string, std::string>& overrides) {
  if (name == "rc") return rc_demo(overrides);
  if (name == "motor") return motor_demo(overrides);
  if (name == "lti") return lti_demo(overrides);
  throw InvalidArgument("unknown model '" + name + "' (accepted: lti, motor, rc)");
}

}  // namespace diffpass::models
