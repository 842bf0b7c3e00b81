#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>

namespace diffpass::cli {

namespace {

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

std::string type_name(const json& j) { return j.type_name(); }

std::string number_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Expressions over a fixed variable list: the state, optionally t, then named constants.
struct ExprTable {
  std::vector<expr::BoundExpr> entries;
  std::size_t rows = 0, cols = 0;
  std::size_t n = 0;
  bool with_t = false;
  std::vector<double> constants;

  template <class T>
  std::vector<T> vars(std::span<const T> x, double t) const {
    std::vector<T> v(x.begin(), x.end());
    if (with_t) v.push_back(T(t));
    for (double c : constants) v.push_back(T(c));
    return v;
  }

  template <class T>
  std::vector<T> vec(double t, std::span<const T> x) const {
    auto v = vars(x, t);
    std::vector<T> out(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) out[k] = entries[k].eval<T>(std::span<const T>(v));
    return out;
  }

  template <class T>
  numerics::MatrixT<T> mat(double t, std::span<const T> x) const {
    auto v = vars(x, t);
    numerics::MatrixT<T> out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out(r, c) = entries[r * cols + c].eval<T>(std::span<const T>(v));
    return out;
  }
};

struct Scope {
  std::vector<std::string> states;
  std::vector<std::string> const_names;
  std::vector<double> const_values;

  [[nodiscard]] std::vector<std::string> names(bool with_t) const {
    std::vector<std::string> v = states;
    if (with_t) v.push_back("t");
    v.insert(v.end(), const_names.begin(), const_names.end());
    return v;
  }
};

expr::BoundExpr bind(const Cursor& c, const Scope& scope, bool with_t) {
  std::string text = c.expr_text();
  expr::Expr e;
  try {
    e = expr::parse(text);
  } catch (const expr::ParseError& err) {
    c.fail("expression '" + text + "' does not parse at offset " + std::to_string(err.offset()) + ": " +
           err.message());
  }
  try {
    return expr::BoundExpr(e, scope.names(with_t));
  } catch (const Error& err) {
    c.fail("expression '" + text + "': " + err.what());
  }
}

std::shared_ptr<const ExprTable> vector_table(const Cursor& c, const Scope& scope, std::size_t len, bool with_t) {
  auto items = c.items();
  if (items.size() != len)
    c.fail("expected " + std::to_string(len) + " entries, got " + std::to_string(items.size()));
  auto t = std::make_shared<ExprTable>();
  t->rows = len;
  t->cols = 1;
  t->n = scope.states.size();
  t->with_t = with_t;
  t->constants = scope.const_values;
  for (const auto& it : items) t->entries.push_back(bind(it, scope, with_t));
  return t;
}

std::shared_ptr<const ExprTable> vector_table_single(const Cursor& c, const Scope& scope) {
  auto t = std::make_shared<ExprTable>();
  t->rows = t->cols = 1;
  t->n = scope.states.size();
  t->constants = scope.const_values;
  t->entries.push_back(bind(c, scope, false));
  return t;
}

std::shared_ptr<const ExprTable> matrix_table(const Cursor& c, const Scope& scope, std::size_t rows,
                                              std::size_t cols, bool with_t) {
  auto t = std::make_shared<ExprTable>();
  t->rows = rows;
  t->cols = cols;
  t->n = scope.states.size();
  t->with_t = with_t;
  t->constants = scope.const_values;
  if (c.raw().is_string() && c.raw().get<std::string>() == "identity") {
    if (rows != cols) c.fail("\"identity\" needs a square matrix, expected " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < cols; ++k) {
        expr::Expr e = expr::parse(r == k ? "1" : "0");
        t->entries.emplace_back(e, scope.names(with_t));
      }
    return t;
  }
  auto rs = c.items();
  if (rs.size() != rows) c.fail("expected " + std::to_string(rows) + " rows, got " + std::to_string(rs.size()));
  for (const auto& r : rs) {
    auto cs = r.items();
    if (cs.size() != cols) r.fail("expected " + std::to_string(cols) + " columns, got " + std::to_string(cs.size()));
    for (const auto& e : cs) t->entries.push_back(bind(e, scope, with_t));
  }
  return t;
}

numerics::VecField vec_field(std::shared_ptr<const ExprTable> t) {
  return numerics::VecField::generic([t](double time, auto x) {
    using T = typename decltype(x)::value_type;
    return t->vec<T>(time, x);
  });
}

numerics::MatField mat_field(std::shared_ptr<const ExprTable> t) {
  return numerics::MatField::generic([t](double time, auto x) {
    using T = typename decltype(x)::value_type;
    return t->mat<T>(time, x);
  });
}

numerics::StateMatField state_mat_field(std::shared_ptr<const ExprTable> t) {
  return numerics::StateMatField::generic([t](auto x) {
    using T = typename decltype(x)::value_type;
    return t->mat<T>(0.0, x);
  });
}

Scope parse_scope(const Cursor& sys) {
  Scope s;
  Cursor st = sys.at("states");
  if (st.raw().is_number_unsigned()) {
    std::uint64_t n = st.count();
    if (n == 0) st.fail("state dimension must be positive");
    for (std::uint64_t k = 0; k < n; ++k) s.states.push_back("x" + std::to_string(k + 1));
  } else {
    for (const auto& it : st.items()) s.states.push_back(it.str());
    if (s.states.empty()) st.fail("state list is empty");
  }
  if (auto p = sys.find("params")) {
    if (!p->raw().is_object()) p->fail("expected an object of named constants, got " + type_name(p->raw()));
    for (const auto& [k, v] : p->raw().items()) {
      Cursor item(v, p->pointer() + "/" + escape_token(k));
      s.const_names.push_back(k);
      s.const_values.push_back(item.number());
    }
  }
  std::set<std::string> seen;
  auto check = [&](const std::string& name, const Cursor& where) {
    if (name == "t") where.fail("'t' is reserved for time");
    if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
      where.fail("'" + name + "' is not an identifier");
    if (!seen.insert(name).second) where.fail("name '" + name + "' is declared twice");
  };
  for (const auto& n : s.states) check(n, st);
  for (const auto& n : s.const_names) check(n, sys.at("params"));
  return s;
}

systems::SignalVec signal_list(const Cursor& c, std::size_t len) {
  auto items = c.items();
  if (items.size() != len) c.fail("expected " + std::to_string(len) + " signals, got " + std::to_string(items.size()));
  systems::SignalVec out;
  for (const auto& it : items) {
    try {
      out.push_back(systems::Signal::analytic(it.expr_text()));
    } catch (const Error& e) {
      it.fail(e.what());
    }
  }
  return out;
}

Vector sized_vector(const Cursor& c, std::size_t len) {
  Vector v = c.vector();
  if (v.size() != len) c.fail("expected " + std::to_string(len) + " entries, got " + std::to_string(v.size()));
  return v;
}

double positive(const Cursor& c) {
  double v = c.number();
  if (!(v > 0.0)) c.fail("must be positive, got " + number_text(v));
  return v;
}

}  // namespace

bool Cursor::has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

Cursor Cursor::at(const std::string& key) const {
  if (!j_->is_object()) fail("expected an object, got " + type_name(*j_));
  auto it = j_->find(key);
  if (it == j_->end()) fail("missing required key '" + key + "'");
  return {*it, ptr_ + "/" + escape_token(key)};
}

std::optional<Cursor> Cursor::find(const std::string& key) const {
  if (!j_->is_object()) fail("expected an object, got " + type_name(*j_));
  auto it = j_->find(key);
  if (it == j_->end()) return std::nullopt;
  return Cursor(*it, ptr_ + "/" + escape_token(key));
}

std::vector<Cursor> Cursor::items() const {
  if (!j_->is_array()) fail("expected an array, got " + type_name(*j_));
  std::vector<Cursor> out;
  for (std::size_t k = 0; k < j_->size(); ++k) out.emplace_back((*j_)[k], ptr_ + "/" + std::to_string(k));
  return out;
}

void Cursor::only(const std::vector<std::string>& allowed) const {
  if (!j_->is_object()) fail("expected an object, got " + type_name(*j_));
  for (const auto& [k, _] : j_->items()) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == k;
    if (!ok) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(ptr_ + "/" + escape_token(k), "unknown key (accepted: " + list + ")");
    }
  }
}

double Cursor::number() const {
  if (!j_->is_number()) fail("expected a number, got " + type_name(*j_));
  double v = j_->get<double>();
  if (!std::isfinite(v)) fail("number is not finite");
  return v;
}

std::uint64_t Cursor::count() const {
  if (!j_->is_number_unsigned()) fail("expected a non-negative integer, got " + j_->dump());
  return j_->get<std::uint64_t>();
}

std::string Cursor::str() const {
  if (!j_->is_string()) fail("expected a string, got " + type_name(*j_));
  return j_->get<std::string>();
}

Vector Cursor::vector() const {
  Vector v;
  for (const auto& it : items()) v.push_back(it.number());
  return v;
}

Matrix Cursor::matrix() const {
  auto rows = items();
  if (rows.empty()) fail("matrix has no rows");
  std::vector<Vector> data;
  for (const auto& r : rows) data.push_back(r.vector());
  Matrix m(data.size(), data[0].size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data[r].size() != m.cols()) rows[r].fail("row length differs from the first row");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = data[r][c];
  }
  return m;
}

std::string Cursor::expr_text() const {
  if (j_->is_string()) return j_->get<std::string>();
  if (j_->is_number()) return number_text(number());
  fail("expected an expression string or a number, got " + type_name(*j_));
}

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "config file '" + path + "' is not valid JSON: " + e.what());
  }
}

SystemSpec parse_system_block(const Cursor& root, const std::map<std::string, std::string>& overrides) {
  SystemSpec out;
  Cursor sc = root.at("system");
  Scope scope;
  if (sc.has("model")) {
    sc.only({"model", "params"});
    const std::string model = sc.at("model").str();
    std::map<std::string, std::string> params;
    if (auto p = sc.find("params")) {
      if (!p->raw().is_object()) p->fail("expected an object, got " + type_name(p->raw()));
      std::vector<std::string> accepted;
      try {
        for (const auto& [k, _] : models::make_demo(model, {}).params) accepted.push_back(k);
      } catch (const Error& e) {
        sc.at("model").fail(e.what());
      }
      p->only(accepted);
      for (const auto& [k, v] : p->raw().items()) params[k] = Cursor(v, p->pointer() + "/" + escape_token(k)).expr_text();
    }
    for (const auto& [k, v] : overrides) params[k] = v;
    try {
      out.demo = models::make_demo(model, params);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      sc.fail(e.what());
    }
    out.sys = out.demo->system;
    out.has_storage = out.has_supply = true;
    for (std::size_t k = 0; k < out.sys.system.n; ++k) scope.states.push_back(out.sys.system.state_name(k));
  } else {
    if (!overrides.empty()) sc.fail("--param applies only to registry models");
    sc.only({"states", "inputs", "f", "g", "h", "i", "params"});
    scope = parse_scope(sc);
    const std::size_t n = scope.states.size();
    Cursor qc = sc.at("inputs");
    const std::size_t q = qc.count();
    if (q == 0) qc.fail("input dimension must be positive");
    systems::DynSystem& s = out.sys.system;
    s.n = n;
    s.q = q;
    s.f = vec_field(vector_table(sc.at("f"), scope, n, true));
    s.g = mat_field(matrix_table(sc.at("g"), scope, n, q, true));
    s.h = vec_field(vector_table(sc.at("h"), scope, q, true));
    if (auto i = sc.find("i")) s.i = mat_field(matrix_table(*i, scope, q, q, true));
    s.state_names = scope.states;
    out.sys.name = "config";
  }

  const std::size_t n = out.sys.system.n, q = out.sys.system.q;
  if (auto st = root.find("storage")) {
    st->only({"M", "potential"});
    if (st->has("M") == st->has("potential")) st->fail("give exactly one of 'M' or 'potential'");
    if (auto m = st->find("M")) {
      out.sys.storage.n = n;
      out.sys.storage.M = state_mat_field(matrix_table(*m, scope, n, n, false));
    } else {
      auto t = vector_table_single(st->at("potential"), scope);
      out.sys.storage = dissipativity::hessian_storage(n, numerics::ScalarField::generic([t](auto x) {
        using T = typename decltype(x)::value_type;
        return t->vec<T>(0.0, x)[0];
      }));
    }
    out.has_storage = true;
  }
  if (auto su = root.find("supply")) {
    su->only({"W", "output_gain", "state_rate"});
    dissipativity::SupplyRate w;
    w.q = q;
    w.W = state_mat_field(matrix_table(su->at("W"), scope, q, q, false));
    if (auto g = su->find("output_gain")) {
      w.output_gain = g->number();
      if (w.output_gain < 0.0) g->fail("output gain must be >= 0");
    }
    if (auto r = su->find("state_rate")) {
      w.state_rate.rate = r->number();
      if (w.state_rate.rate < 0.0) r->fail("state rate must be >= 0");
    }
    out.sys.supply = std::move(w);
    out.has_supply = true;
  }
  return out;
}

RunSpec parse_run(const Cursor& run, std::size_t n, std::size_t q) {
  RunSpec r;
  run.only({"x0", "dx0", "x0_b", "u", "du", "t_final", "dt", "sample_dt", "tol", "stepper", "rk45_tol", "seed", "n_s",
            "finsler", "grid", "Pi", "inputs"});
  if (auto c = run.find("x0")) r.x0 = sized_vector(*c, n);
  if (auto c = run.find("dx0")) r.dx0 = sized_vector(*c, n);
  if (auto c = run.find("x0_b")) r.x0_b = sized_vector(*c, n);
  if (auto c = run.find("u")) r.u = signal_list(*c, q);
  if (auto c = run.find("du")) r.du = signal_list(*c, q);
  if (auto c = run.find("t_final")) r.t_final = positive(*c);
  if (auto c = run.find("dt")) r.dt = positive(*c);
  if (auto c = run.find("sample_dt")) {
    r.sample_dt = c->number();
    if (*r.sample_dt < 0.0) c->fail("must be >= 0");
  }
  if (auto c = run.find("tol")) r.tol = positive(*c);
  if (auto c = run.find("stepper")) {
    r.stepper = c->str();
    if (r.stepper != "rk4" && r.stepper != "rk45") c->fail("stepper must be \"rk4\" or \"rk45\"");
  }
  if (auto c = run.find("rk45_tol")) r.rk45_tol = positive(*c);
  if (auto c = run.find("seed")) r.seed = c->count();
  if (auto c = run.find("n_s")) {
    r.n_s = c->count();
    if (r.n_s < 3) c->fail("need at least 3 s nodes");
  }
  if (auto c = run.find("finsler")) {
    r.finsler = c->str();
    if (r.finsler != "euclidean" && r.finsler != "storage") c->fail("finsler must be \"euclidean\" or \"storage\"");
  }
  if (auto c = run.find("grid")) {
    c->only({"lo", "hi", "counts", "random", "seed"});
    dissipativity::GridSpec g;
    g.lo = sized_vector(c->at("lo"), n);
    g.hi = sized_vector(c->at("hi"), n);
    for (std::size_t k = 0; k < n; ++k)
      if (!(g.lo[k] <= g.hi[k])) c->at("hi").fail("upper corner below lower corner on axis " + std::to_string(k));
    if (auto cc = c->find("counts")) {
      auto items = cc->items();
      if (items.size() != n) cc->fail("expected " + std::to_string(n) + " counts");
      for (const auto& it : items) g.counts.push_back(it.count());
    } else {
      g.counts.assign(n, 5);
    }
    if (auto rr = c->find("random")) g.random_samples = rr->count();
    if (auto s = c->find("seed")) g.seed = s->count();
    r.grid = g;
  }
  if (auto c = run.find("Pi")) {
    Matrix pi = c->matrix();
    if (pi.rows() != n || pi.cols() != q)
      c->fail("expected a " + std::to_string(n) + "x" + std::to_string(q) + " matrix, got " + pi.shape());
    r.pi = pi;
  }
  if (auto c = run.find("inputs"))
    for (const auto& it : c->items()) r.inputs.push_back(sized_vector(it, q));
  return r;
}

numerics::VecField parse_feedback(const Cursor& c, const std::vector<std::string>& states, std::size_t q) {
  Scope scope;
  scope.states = states;
  if (c.raw().is_object()) {
    c.only({"potential", "Pi"});
    auto t = vector_table_single(c.at("potential"), scope);
    numerics::ScalarField m = numerics::ScalarField::generic([t](auto x) {
      using T = typename decltype(x)::value_type;
      return t->vec<T>(0.0, x)[0];
    });
    Matrix pi = c.at("Pi").matrix();
    if (pi.rows() != states.size() || pi.cols() != q)
      c.at("Pi").fail("expected a " + std::to_string(states.size()) + "x" + std::to_string(q) + " matrix, got " +
                      pi.shape());
    return interconnect::build_equalizing_feedback(m, pi);
  }
  return vec_field(vector_table(c, scope, q, false));
}

}  // namespace diffpass::cli
