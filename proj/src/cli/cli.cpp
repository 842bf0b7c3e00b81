#include "diffpass/cli/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "config.hpp"
#include "diffpass/numerics/linalg.hpp"
#include "diffpass/numerics/random.hpp"
#include "report.hpp"

namespace diffpass::cli {

namespace {

namespace fs = std::filesystem;
using dissipativity::PassiveSystem;
using systems::Signal;
using systems::SignalVec;
using systems::SimOptions;

struct Options {
  std::string command;
  std::string config;
  std::string out = ".";
  std::string format = "csv";
  std::optional<double> t_final, dt, tol;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::vector<std::string> params;
  std::string model;
};

class Session {
 public:
  explicit Session(Options o) : o_(std::move(o)) {}

  [[nodiscard]] const Options& opt() const { return o_; }

  void json_file(const std::string& name, const ojson& j) {
    write_atomic((fs::path(o_.out) / name).string(), dump(j));
    files_.push_back(name);
  }

  void table_file(const std::string& stem, const Table& t) {
    if (o_.format == "json") {
      json_file(stem + ".json", t.to_json());
    } else {
      write_atomic((fs::path(o_.out) / (stem + ".csv")).string(), t.csv());
      files_.push_back(stem + ".csv");
    }
  }

  void say(const std::string& s) const {
    if (!o_.quiet) std::cout << s << "\n";
  }

  [[nodiscard]] std::map<std::string, std::string> overrides() const {
    std::map<std::string, std::string> m;
    for (const auto& p : o_.params) {
      auto eq = p.find('=');
      if (eq == std::string::npos || eq == 0) throw InvalidArgument("--param expects key=value, got '" + p + "'");
      m[p.substr(0, eq)] = p.substr(eq + 1);
    }
    return m;
  }

  [[nodiscard]] const std::vector<std::string>& files() const { return files_; }

 private:
  Options o_;
  std::vector<std::string> files_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

// Everything a command needs after config and flags are merged.
struct Plan {
  SystemSpec spec;
  RunSpec run;
  SimOptions sim;
  double t_final = 0.0;
  std::string run_ptr = "/run";
};

Plan make_plan(const Session& s, const Cursor& root) {
  Plan p;
  p.spec = parse_system_block(root, s.overrides());
  const auto& sys = p.spec.sys.system;
  if (auto r = root.find("run")) p.run = parse_run(*r, sys.n, sys.q);
  const auto& o = s.opt();
  if (o.tol) p.run.tol = o.tol;
  if (o.seed) p.run.seed = *o.seed;

  if (o.t_final)
    p.t_final = *o.t_final;
  else if (p.run.t_final)
    p.t_final = *p.run.t_final;
  else if (p.spec.demo)
    p.t_final = p.spec.demo->t_final;
  else
    throw ConfigError("/run/t_final", "missing required key 't_final' (or pass --t-final)");
  if (!(p.t_final > 0.0)) throw InvalidArgument("--t-final must be positive");

  double dt = o.dt ? *o.dt : p.run.dt ? *p.run.dt : p.spec.demo ? p.spec.demo->dt : 1e-3;
  if (!(dt > 0.0)) throw InvalidArgument("--dt must be positive");
  if (p.run.stepper == "rk45")
    p.sim.stepper = numerics::AdaptiveRk45{.tol = p.run.rk45_tol, .max_step = dt};
  else
    p.sim.stepper = numerics::FixedRk4{dt};
  p.sim.sample_dt = p.run.sample_dt ? *p.run.sample_dt : p.t_final / 1000.0;
  return p;
}

Vector x0_of(const Plan& p) {
  if (p.run.x0) return *p.run.x0;
  if (p.spec.demo) return p.spec.demo->x0_a;
  throw ConfigError(p.run_ptr + "/x0", "missing required key 'x0'");
}

Vector x0_b_of(const Plan& p) {
  if (p.run.x0_b) return *p.run.x0_b;
  if (p.spec.demo) return p.spec.demo->x0_b;
  throw ConfigError(p.run_ptr + "/x0_b", "missing required key 'x0_b'");
}

Vector dx0_of(const Plan& p) {
  if (p.run.dx0) return *p.run.dx0;
  if (p.spec.demo && !p.run.x0) {
    Vector d(p.spec.demo->x0_a.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = p.spec.demo->x0_b[k] - p.spec.demo->x0_a[k];
    return d;
  }
  return Vector(p.spec.sys.system.n, 0.0);
}

SignalVec u_of(const Plan& p) {
  if (p.run.u) return *p.run.u;
  if (p.spec.demo) return p.spec.demo->u;
  return systems::zero_signals(p.spec.sys.system.q);
}

SignalVec du_of(const Plan& p) { return p.run.du ? *p.run.du : systems::zero_signals(p.spec.sys.system.q); }

void need_storage(const Plan& p) {
  if (!p.spec.has_storage) throw ConfigError("/storage", "missing required key 'storage'");
}

void need_supply(const Plan& p) {
  if (!p.spec.has_supply) throw ConfigError("/supply", "missing required key 'supply'");
}

ojson header(const Session& s, const Plan& p) {
  ojson h;
  h["command"] = s.opt().command;
  h["system"] = p.spec.sys.name;
  h["n"] = p.spec.sys.system.n;
  h["q"] = p.spec.sys.system.q;
  h["stepper"] = numerics::stepper_id(p.sim.stepper);
  h["step"] = numerics::stepper_tolerance(p.sim.stepper);
  h["t_final"] = p.t_final;
  h["sample_dt"] = p.sim.sample_dt;
  h["seed"] = p.run.seed;
  if (p.spec.demo) h["params"] = p.spec.demo->params;
  return h;
}

dissipativity::GridSpec grid_of(const Plan& p) {
  if (p.run.grid) return *p.run.grid;
  const std::size_t n = p.spec.sys.system.n;
  return {Vector(n, -2.0), Vector(n, 2.0), std::vector<std::size_t>(n, 5), 0, p.run.seed};
}

// ------------------------------------------------------------------ commands

int cmd_simulate(Session& s, const Cursor& root) {
  root.only({"system", "storage", "supply", "run"});
  Plan p = make_plan(s, root);
  auto traj = systems::simulate_prolonged(p.spec.sys.system, x0_of(p), dx0_of(p), u_of(p), du_of(p), p.t_final, p.sim);
  std::optional<dissipativity::AuditReport> rep;
  if (p.spec.has_storage && p.spec.has_supply)
    rep = dissipativity::audit(traj, p.spec.sys.storage, p.spec.sys.supply, p.run.tol.value_or(1e-9));
  s.table_file("trajectory", trace_table(traj, rep ? &*rep : nullptr));
  ojson j = header(s, p);
  j["samples"] = traj.size();
  j["x_final"] = vec_json(traj.x.back());
  j["dx_final"] = vec_json(traj.dx.back());
  s.json_file("simulate.json", j);
  s.say("simulate: " + std::to_string(traj.size()) + " samples to t = " + fmt(traj.times.back()));
  return kPass;
}

int cmd_audit(Session& s, const Cursor& root) {
  root.only({"system", "storage", "supply", "run"});
  Plan p = make_plan(s, root);
  need_storage(p);
  need_supply(p);
  auto traj = systems::simulate_prolonged(p.spec.sys.system, x0_of(p), dx0_of(p), u_of(p), du_of(p), p.t_final, p.sim);
  auto rep = dissipativity::audit(traj, p.spec.sys.storage, p.spec.sys.supply, p.run.tol.value_or(1e-9));
  ojson j = header(s, p);
  j["audit"] = audit_json(rep);
  j["pass"] = rep.pass;
  s.table_file("audit_trace", trace_table(traj, &rep));
  s.json_file("audit.json", j);
  s.say("audit: " + verdict(rep.pass) + " (worst violation " + fmt(rep.worst_violation) + ")");
  return rep.pass ? kPass : kFailed;
}

int report_certificate(Session& s, const Plan& p, const dissipativity::CertificateReport& rep, const char* file) {
  ojson j = header(s, p);
  j["report"] = certificate_json(rep);
  j["pass"] = rep.pass;
  s.json_file(file, j);
  for (const auto& c : rep.conditions)
    s.say("  " + c.name + ": worst " + fmt(c.worst) + " (" + c.kind + ") " + verdict(c.pass));
  s.say(std::string("certificate ") + rep.certificate + ": " + verdict(rep.pass));
  return rep.pass ? kPass : kFailed;
}

dissipativity::CertificateOptions cert_options(const Plan& p) {
  dissipativity::CertificateOptions o;
  if (p.run.tol) o.margin_tol = *p.run.tol;
  return o;
}

int cmd_certify_uc(Session& s, const Cursor& root) {
  root.only({"system", "storage", "supply", "run"});
  Plan p = make_plan(s, root);
  need_storage(p);
  need_supply(p);
  const auto& sys = p.spec.sys.system;
  auto points = dissipativity::grid_points(grid_of(p));
  Matrix pi;
  if (p.run.pi) {
    pi = *p.run.pi;
  } else {
    // default: M g at the first grid point
    Vector x0 = points.front();
    pi = p.spec.sys.storage.M.at<double>()(x0) * sys.g.at<double>()(0.0, x0);
  }
  auto rep = dissipativity::check_uc(sys, p.spec.sys.storage.M, pi, p.spec.sys.supply.W, points, cert_options(p));
  return report_certificate(s, p, rep, "certificate_uc.json");
}

int cmd_certify_ap(Session& s, const Cursor& root) {
  root.only({"system", "storage", "supply", "run"});
  Plan p = make_plan(s, root);
  need_storage(p);
  need_supply(p);
  auto points = dissipativity::grid_points(grid_of(p));
  std::vector<Vector> inputs = p.run.inputs;
  if (inputs.empty()) {
    const std::size_t q = p.spec.sys.system.q;
    for (std::size_t k = 0; k < q; ++k)
      for (double sign : {1.0, -1.0}) {
        Vector u(q, 0.0);
        u[k] = sign;
        inputs.push_back(u);
      }
  }
  auto rep = dissipativity::check_ap(p.spec.sys.system, p.spec.sys.storage.M, p.spec.sys.supply.W, points, inputs,
                                     cert_options(p));
  return report_certificate(s, p, rep, "certificate_ap.json");
}

int cmd_interconnect(Session& s, const Cursor& root) {
  root.only({"interconnect", "run"});
  Cursor ic = root.at("interconnect");
  ic.only({"first", "second", "coupling", "k1", "k2", "equalization"});
  if (!s.opt().params.empty()) throw InvalidArgument("--param is not supported for interconnect");
  auto part = [&](const char* key) {
    Cursor c = ic.at(key);
    c.only({"system", "storage", "supply"});
    SystemSpec sp = parse_system_block(c, {});
    if (!sp.has_storage) throw ConfigError(c.pointer() + "/storage", "missing required key 'storage'");
    if (!sp.has_supply) throw ConfigError(c.pointer() + "/supply", "missing required key 'supply'");
    return sp;
  };
  SystemSpec a = part("first"), b = part("second");
  std::string coupling = ic.find("coupling") ? ic.at("coupling").str() : "output";
  interconnect::InterconnectedSystem loop;
  std::optional<interconnect::EqualizationReport> eq;
  if (coupling == "output") {
    loop = interconnect::output_feedback(a.sys, b.sys);
  } else if (coupling == "state") {
    auto k1 = parse_feedback(ic.at("k1"), a.sys.system.state_names, b.sys.system.q);
    auto k2 = parse_feedback(ic.at("k2"), b.sys.system.state_names, a.sys.system.q);
    loop = interconnect::state_feedback(a.sys, b.sys, k1, k2);
    const std::size_t n1 = a.sys.system.n, n2 = b.sys.system.n;
    Vector lo1(n1, -1.0), hi1(n1, 1.0), lo2(n2, -1.0), hi2(n2, 1.0);
    std::size_t random = 100;
    std::uint64_t seed = s.opt().seed.value_or(0);
    if (auto e = ic.find("equalization")) {
      e->only({"lo1", "hi1", "lo2", "hi2", "random"});
      if (auto c = e->find("lo1")) lo1 = c->vector();
      if (auto c = e->find("hi1")) hi1 = c->vector();
      if (auto c = e->find("lo2")) lo2 = c->vector();
      if (auto c = e->find("hi2")) hi2 = c->vector();
      if (auto c = e->find("random")) random = c->count();
    }
    auto samples = interconnect::equalization_samples(lo1, hi1, lo2, hi2, random, seed);
    eq = interconnect::check_equalization(a.sys.system, b.sys.system, k1, k2, a.sys.supply.W, b.sys.supply.W, samples);
  } else {
    ic.at("coupling").fail("coupling must be \"output\" or \"state\"");
  }

  Plan p;
  p.spec.sys = loop.as_passive();
  p.spec.has_storage = p.spec.has_supply = true;
  const auto& sys = p.spec.sys.system;
  if (auto r = root.find("run")) p.run = parse_run(*r, sys.n, sys.q);
  const auto& o = s.opt();
  if (o.tol) p.run.tol = o.tol;
  if (o.seed) p.run.seed = *o.seed;
  p.t_final = o.t_final ? *o.t_final : p.run.t_final.value_or(0.0);
  if (!(p.t_final > 0.0)) throw ConfigError("/run/t_final", "missing required key 't_final' (or pass --t-final)");
  p.sim.stepper = numerics::FixedRk4{o.dt ? *o.dt : p.run.dt.value_or(1e-3)};
  p.sim.sample_dt = p.run.sample_dt.value_or(p.t_final / 1000.0);

  auto traj = systems::simulate_prolonged(sys, x0_of(p), dx0_of(p), u_of(p), du_of(p), p.t_final, p.sim);
  auto rep = dissipativity::audit(traj, p.spec.sys.storage, p.spec.sys.supply, p.run.tol.value_or(1e-9));
  bool pass = rep.pass && (!eq || eq->pass);
  ojson j = header(s, p);
  j["coupling"] = coupling;
  j["state_rate"] = {{"rate", p.spec.sys.supply.state_rate.rate},
                     {"argument_scale", p.spec.sys.supply.state_rate.argument_scale}};
  j["audit"] = audit_json(rep);
  if (eq) j["equalization"] = equalization_json(*eq);
  j["pass"] = pass;
  s.table_file("interconnect_trace", trace_table(traj, &rep));
  s.json_file("interconnect.json", j);
  s.say("interconnect: closed-loop audit " + verdict(rep.pass) +
        (eq ? ", equalization " + verdict(eq->pass) + " (max residual " + fmt(eq->max_residual) + ")" : ""));
  return pass ? kPass : kFailed;
}

incremental::NonexpansionReport nonexpansion(const Plan& p, const Vector& a, const Vector& b, const SignalVec& u,
                                             Table* length) {
  auto fam = incremental::homotopy_integrate(p.spec.sys.system, incremental::InitialCurve::straight(a, b), u,
                                             p.t_final, p.run.n_s, p.sim);
  bool use_storage = p.run.finsler == "storage" && p.spec.has_storage;
  auto k = use_storage ? incremental::storage_finsler(p.spec.sys.storage) : incremental::euclidean_finsler();
  auto rep = incremental::verify_nonexpansion(fam, k, p.run.tol.value_or(1e-6));
  if (length) {
    length->columns = {"t", "L"};
    for (std::size_t i = 0; i < rep.length.L.size(); ++i) length->rows.push_back({rep.length.times[i], rep.length.L[i]});
  }
  return rep;
}

int cmd_homotopy(Session& s, const Cursor& root) {
  root.only({"system", "storage", "supply", "run"});
  Plan p = make_plan(s, root);
  Table length;
  auto rep = nonexpansion(p, x0_of(p), x0_b_of(p), u_of(p), &length);
  ojson j = header(s, p);
  j["n_s"] = p.run.n_s;
  j["finsler"] = p.run.finsler == "storage" && p.spec.has_storage ? "storage" : "euclidean";
  j["nonexpansion"] = nonexpansion_json(rep);
  j["pass"] = rep.pass;
  s.table_file("homotopy_length", length);
  s.json_file("homotopy.json", j);
  s.say("homotopy: " + verdict(rep.pass) + " (L(0) = " + fmt(rep.length.L.front()) +
        ", L(T) = " + fmt(rep.length.L.back()) + ")");
  return rep.pass ? kPass : kFailed;
}

incremental::ConvergenceReport convergence(const Plan& p, const Vector& a, const Vector& b, const SignalVec& u,
                                           double tol, Table* gap) {
  incremental::ConvergenceOptions o;
  o.tol = tol;
  o.n_s = p.run.n_s;
  o.sim = p.sim;
  auto rep = incremental::verify_output_convergence(p.spec.sys, a, b, u, p.t_final, o);
  if (gap) {
    gap->columns = {"t", "gap"};
    for (std::size_t i = 0; i < rep.gap.size(); ++i) gap->rows.push_back({rep.times[i], rep.gap[i]});
  }
  return rep;
}

int cmd_converge(Session& s, const Cursor& root) {
  root.only({"system", "storage", "supply", "run"});
  Plan p = make_plan(s, root);
  need_storage(p);
  need_supply(p);
  Table gap;
  auto rep = convergence(p, x0_of(p), x0_b_of(p), u_of(p), p.run.tol.value_or(1e-3), &gap);
  ojson j = header(s, p);
  j["n_s"] = p.run.n_s;
  j["convergence"] = convergence_json(rep);
  j["pass"] = rep.pass;
  s.table_file("convergence_gap", gap);
  s.json_file("convergence.json", j);
  s.say("converge: " + verdict(rep.pass) + " (gap ratio " + fmt(rep.ratio) + ")");
  return rep.pass ? kPass : kFailed;
}

double distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

int cmd_demo(Session& s) {
  const auto& o = s.opt();
  Plan p;
  p.spec.demo = models::make_demo(o.model, s.overrides());
  const models::Demo& d = *p.spec.demo;
  p.spec.sys = d.system;
  p.spec.has_storage = p.spec.has_supply = true;
  p.run.seed = o.seed.value_or(0);
  p.t_final = o.t_final.value_or(d.t_final);
  if (!(p.t_final > 0.0)) throw InvalidArgument("--t-final must be positive");
  double dt = o.dt.value_or(d.dt);
  if (!(dt > 0.0)) throw InvalidArgument("--dt must be positive");
  p.sim.stepper = numerics::FixedRk4{dt};
  p.sim.sample_dt = p.t_final / 1000.0;
  const double tol = o.tol.value_or(1e-9);
  const std::string name = d.name;
  const auto& sys = p.spec.sys;

  ojson checks = ojson::object();
  bool pass = true;
  auto record = [&](const std::string& check, bool ok) {
    checks[check] = ok;
    pass = pass && ok;
    s.say("  " + check + ": " + verdict(ok));
  };

  // audit along the displacement joining the two initial states
  auto traj = systems::simulate_prolonged(sys.system, d.x0_a, dx0_of(p), d.u, systems::zero_signals(sys.system.q),
                                          p.t_final, p.sim);
  auto rep = dissipativity::audit(traj, sys.storage, sys.supply, tol);
  ojson audit = header(s, p);
  audit["audit"] = audit_json(rep);
  bool audit_pass = rep.pass;
  if (name == "rc") {
    // seeded random trajectories with random input displacements
    numerics::Rng rng(p.run.seed);
    const std::size_t count = 20;
    double worst = -std::numeric_limits<double>::infinity();
    bool all = true;
    for (std::size_t k = 0; k < count; ++k) {
      const double q0 = rng.uniform(-1.0, 1.0), dq0 = rng.uniform(-1.0, 1.0);
      const double amp = rng.uniform(-1.0, 1.0), freq = rng.uniform(0.5, 2.0);
      Signal du = Signal::closure([amp, freq](double t) { return amp * std::sin(freq * t); });
      auto tr = systems::simulate_prolonged(sys.system, Vector{q0}, Vector{dq0}, d.u, {du}, std::min(p.t_final, 5.0),
                                            p.sim);
      auto r = dissipativity::audit(tr, sys.storage, sys.supply, tol);
      worst = std::max(worst, r.worst_violation);
      all = all && r.pass;
    }
    audit["random_trajectories"] = {{"count", count}, {"worst_violation", worst}, {"pass", all}};
    audit_pass = audit_pass && all;
  }
  audit["pass"] = audit_pass;
  s.table_file(name + "_trace", trace_table(traj, &rep));
  s.json_file(name + "_audit.json", audit);
  record("audit", audit_pass);

  if (name == "lti") {
    const double b = std::stod(d.params.at("b")), c = std::stod(d.params.at("c"));
    dissipativity::GridSpec g{{-2.0}, {2.0}, {9}, 0, p.run.seed};
    auto cert = dissipativity::check_uc(sys.system, numerics::constant_field(Matrix::identity(1)),
                                        Matrix(1, 1, {b}), numerics::constant_field(Matrix(1, 1, {b / c})),
                                        dissipativity::grid_points(g));
    ojson cj = header(s, p);
    cj["report"] = certificate_json(cert);
    cj["pass"] = cert.pass;
    s.json_file(name + "_certificate.json", cj);
    record("certificate_uc", cert.pass);
  }

  if (name == "motor") {
    ojson fj = header(s, p);
    fj["residual"] = d.feedforward_residual;
    fj["tol"] = 1e-8;
    fj["phi_s_ref_initial"] = vec_json({d.reference[2].value(0.0), d.reference[3].value(0.0)});
    fj["u_s_initial"] = vec_json({d.u[0].value(0.0), d.u[1].value(0.0)});
    // regulation from the second initial state
    auto tr = systems::simulate(sys.system, d.x0_b, d.u, p.t_final, p.sim);
    auto ref = [&](double t) {
      Vector r;
      for (const auto& sig : d.reference) r.push_back(sig.value(t));
      return r;
    };
    const double e0 = distance(tr.x.front(), ref(tr.times.front()));
    const double eT = distance(tr.x.back(), ref(tr.times.back()));
    fj["regulation"] = {{"initial_error", e0}, {"final_error", eT}, {"ratio", e0 > 0 ? eT / e0 : 0.0},
                        {"tol", 1e-3}, {"pass", eT <= 1e-3 * e0}};
    fj["pass"] = eT <= 1e-3 * e0 && d.feedforward_residual <= 1e-8;
    s.json_file(name + "_feedforward.json", fj);
    record("feedforward_regulation", eT <= 1e-3 * e0);

    Table length;
    auto ne = nonexpansion(p, d.x0_a, d.x0_b, d.u, &length);
    ojson nj = header(s, p);
    nj["nonexpansion"] = nonexpansion_json(ne);
    nj["pass"] = ne.pass;
    s.table_file(name + "_length", length);
    s.json_file(name + "_nonexpansion.json", nj);
    record("nonexpansion", ne.pass);
  }

  ojson cj = header(s, p);
  if (sys.supply.output_gain > 0.0) {
    Table gap;
    auto conv = convergence(p, d.x0_a, d.x0_b, d.u, 1e-3, &gap);
    cj["convergence"] = convergence_json(conv);
    cj["pass"] = conv.pass;
    s.table_file(name + "_gap", gap);
    record("convergence", conv.pass);
  } else {
    cj["convergence"] = "skipped: supply has no output strictness";
    checks["convergence"] = "skipped";
  }
  s.json_file(name + "_convergence.json", cj);

  ojson summary = header(s, p);
  summary["checks"] = checks;
  summary["files"] = s.files();
  summary["pass"] = pass;
  s.json_file(name + "_summary.json", summary);
  s.say("demo " + name + ": " + verdict(pass));
  return pass ? kPass : kFailed;
}

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const expr::ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const InvalidSupply*>(&e)) return "InvalidSupply";
  if (dynamic_cast<const InvalidCertificate*>(&e)) return "InvalidCertificate";
  if (dynamic_cast<const AlgebraicLoopError*>(&e)) return "AlgebraicLoopError";
  if (dynamic_cast<const InvalidFinslerStructure*>(&e)) return "InvalidFinslerStructure";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "InvalidArgument";
  if (dynamic_cast<const IntegrationError*>(&e)) return "IntegrationError";
  if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
  if (dynamic_cast<const expr::EvalError*>(&e)) return "EvalError";
  if (dynamic_cast<const SupplyIntegrabilityError*>(&e)) return "SupplyIntegrabilityError";
  if (dynamic_cast<const ModelDomainError*>(&e)) return "ModelDomainError";
  if (dynamic_cast<const FeedforwardConstructionError*>(&e)) return "FeedforwardConstructionError";
  if (dynamic_cast<const UnboundedTrajectoryError*>(&e)) return "UnboundedTrajectoryError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

void write_error(const Options& o, const std::exception& e, int code) {
  ojson j;
  j["command"] = o.command;
  j["exit_code"] = code;
  j["error"] = {{"type", error_type(e)}, {"message", e.what()}};
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) j["error"]["pointer"] = c->pointer();
  if (const auto* n = dynamic_cast<const NumericalError*>(&e); n && n->column()) j["error"]["column"] = *n->column();
  if (const auto* i = dynamic_cast<const IntegrationError*>(&e)) j["error"]["last_good_time"] = i->last_good_time();
  j["pass"] = false;
  try {
    write_atomic((fs::path(o.out) / "error.json").string(), dump(j));
  } catch (const std::exception&) {
    // the message on stderr is all that is left
  }
}

int dispatch(Session& s) {
  const auto& o = s.opt();
  if (o.command == "demo") return cmd_demo(s);
  if (o.config.empty()) throw InvalidArgument(o.command + " needs --config <path>");
  json cfg = load_json(o.config);
  Cursor root(cfg, "");
  if (!cfg.is_object()) root.fail("config must be a JSON object");
  if (o.command == "simulate") return cmd_simulate(s, root);
  if (o.command == "audit") return cmd_audit(s, root);
  if (o.command == "certify-uc") return cmd_certify_uc(s, root);
  if (o.command == "certify-ap") return cmd_certify_ap(s, root);
  if (o.command == "interconnect") return cmd_interconnect(s, root);
  if (o.command == "homotopy") return cmd_homotopy(s, root);
  if (o.command == "converge") return cmd_converge(s, root);
  throw InvalidArgument("unknown command " + o.command);
}

}  // namespace

int run(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"Differential passivity toolkit: simulate, audit and certify nonlinear systems", "diffpass"};
  app.require_subcommand(1);

  double t_final = 0.0, dt = 0.0, tol = 0.0;
  std::uint64_t seed = 0;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"simulate", "integrate the prolonged system and write the trajectory"},
                      {"audit", "check the dissipation inequality along a trajectory"},
                      {"certify-uc", "check the sufficient conditions for systems without throughput"},
                      {"certify-ap", "check the sufficient conditions for systems with throughput"},
                      {"interconnect", "audit a feedback interconnection of two systems"},
                      {"homotopy", "track the Finsler length of a curve of initial conditions"},
                      {"converge", "check output convergence of two trajectories"},
                      {"demo", "canned end-to-end run of a built-in model"}};
  std::vector<CLI::App*> apps;
  std::vector<std::tuple<CLI::Option*, CLI::Option*, CLI::Option*, CLI::Option*>> numeric;
  for (const auto& sub : subs) {
    CLI::App* a = app.add_subcommand(sub.name, sub.help);
    if (std::string(sub.name) == "demo")
      a->add_option("model", o.model, "built-in model")->required()->check(CLI::IsMember({"rc", "motor", "lti"}));
    else
      a->add_option("--config", o.config, "experiment config (JSON)");
    a->add_option("--out", o.out, "output directory")->capture_default_str();
    a->add_option("--format", o.format, "trace format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    auto* ot = a->add_option("--t-final", t_final, "final time");
    auto* od = a->add_option("--dt", dt, "RK4 step");
    auto* ol = a->add_option("--tol", tol, "tolerance of the main check");
    auto* os = a->add_option("--seed", seed, "seed for sampled checks");
    a->add_flag("--quiet", o.quiet, "no summary on stdout");
    a->add_option("--param", o.params, "model parameter override key=value (repeatable)");
    apps.push_back(a);
    numeric.emplace_back(ot, od, ol, os);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }
  for (std::size_t k = 0; k < apps.size(); ++k) {
    if (!apps[k]->parsed()) continue;
    o.command = apps[k]->get_name();
    auto [ot, od, ol, os] = numeric[k];
    if (ot->count()) o.t_final = t_final;
    if (od->count()) o.dt = dt;
    if (ol->count()) o.tol = tol;
    if (os->count()) o.seed = seed;
  }

  Session s(o);
  try {
    return dispatch(s);
  } catch (const InvalidArgument& e) {
    std::cerr << "diffpass " << o.command << ": " << e.what() << "\n";
    write_error(o, e, kUsage);
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "diffpass " << o.command << ": " << error_type(e) << ": " << e.what() << "\n";
    write_error(o, e, kFailed);
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "diffpass " << o.command << ": " << e.what() << "\n";
    write_error(o, e, kUsage);
    return kUsage;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"diffpass"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace diffpass::cli
