#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace diffpass::cli {

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const ojson& j, int depth, std::string& out) {
  const std::string pad(2 * (depth + 1), ' '), close(2 * depth, ' ');
  switch (j.type()) {
    case ojson::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + ojson(k).dump() + ": ";
        emit(v, depth + 1, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      if (flat) {
        out += "[";
        for (std::size_t k = 0; k < j.size(); ++k) {
          if (k) out += ", ";
          emit(j[k], depth + 1, out);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ",\n";
        out += pad;
        emit(j[k], depth + 1, out);
      }
      out += "\n" + close + "]";
      return;
    }
    case ojson::value_t::number_float:
      out += num(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump(const ojson& j) {
  std::string out;
  emit(j, 0, out);
  out += "\n";
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

std::string Table::csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += "\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + csv_num(r[c]);
    out += "\n";
  }
  return out;
}

ojson Table::to_json() const {
  ojson j;
  j["columns"] = columns;
  ojson rs = ojson::array();
  for (const auto& r : rows) rs.push_back(vec_json(r));
  j["rows"] = std::move(rs);
  return j;
}

Table trace_table(const systems::ProlongedTrajectory& traj, const dissipativity::AuditReport* audit) {
  Table t;
  const std::size_t n = traj.n, q = traj.q;
  t.columns.push_back("t");
  auto add = [&](const char* prefix, std::size_t count) {
    for (std::size_t k = 1; k <= count; ++k) t.columns.push_back(prefix + std::to_string(k));
  };
  add("x_", n);
  add("dx_", n);
  add("u_", q);
  add("du_", q);
  add("y_", q);
  add("dy_", q);
  for (const char* c : {"S", "Q", "slack"}) t.columns.emplace_back(c);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::vector<double> row{traj.times[k]};
    for (const auto* v : {&traj.x[k], &traj.dx[k], &traj.u[k], &traj.du[k], &traj.y[k], &traj.dy[k]})
      row.insert(row.end(), v->begin(), v->end());
    if (audit) {
      row.push_back(audit->S[k]);
      row.push_back(audit->Q[k]);
      row.push_back(audit->slack[k]);
    } else {
      row.insert(row.end(), {nan, nan, nan});
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ojson vec_json(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(x);
  return a;
}

ojson audit_json(const dissipativity::AuditReport& r) {
  ojson j;
  j["samples"] = r.times.size();
  j["tol"] = r.tol;
  j["worst_violation"] = r.worst_violation;
  j["worst_index"] = r.worst_index;
  j["worst_time"] = r.times.empty() ? 0.0 : r.times[r.worst_index];
  j["worst_integral_violation"] = r.worst_integral_violation;
  j["S_initial"] = r.S.empty() ? 0.0 : r.S.front();
  j["S_final"] = r.S.empty() ? 0.0 : r.S.back();
  j["pass"] = r.pass;
  return j;
}

ojson certificate_json(const dissipativity::CertificateReport& r) {
  ojson j;
  j["certificate"] = r.certificate;
  j["points"] = r.points.size();
  ojson conds = ojson::array();
  for (const auto& c : r.conditions) {
    ojson cj;
    cj["name"] = c.name;
    cj["kind"] = c.kind;
    cj["worst"] = c.worst;
    cj["worst_index"] = c.worst_index;
    cj["worst_point"] = vec_json(c.worst_point);
    if (!c.worst_input.empty()) cj["worst_input"] = vec_json(c.worst_input);
    cj["tol"] = c.tol;
    cj["pass"] = c.pass;
    cj["values"] = vec_json(c.values);
    conds.push_back(std::move(cj));
  }
  j["conditions"] = std::move(conds);
  j["pass"] = r.pass;
  return j;
}

ojson equalization_json(const interconnect::EqualizationReport& r) {
  ojson j;
  j["samples"] = r.samples.size();
  j["max_residual"] = r.max_residual;
  j["worst_sample"] = r.worst_sample;
  j["worst_a"] = r.worst_a;
  j["worst_b"] = r.worst_b;
  if (!r.samples.empty()) {
    j["worst_x1"] = vec_json(r.samples[r.worst_sample].first);
    j["worst_x2"] = vec_json(r.samples[r.worst_sample].second);
  }
  j["tol"] = r.tol;
  j["pass"] = r.pass;
  return j;
}

ojson nonexpansion_json(const incremental::NonexpansionReport& r) {
  ojson j;
  j["rule"] = r.length.rule;
  j["samples"] = r.length.L.size();
  j["L_initial"] = r.length.L.empty() ? 0.0 : r.length.L.front();
  j["L_final"] = r.length.L.empty() ? 0.0 : r.length.L.back();
  j["margin"] = r.margin;
  j["worst_index"] = r.worst_index;
  j["worst_time"] = r.length.times.empty() ? 0.0 : r.length.times[r.worst_index];
  j["tol_rel"] = r.tol_rel;
  j["tol_abs"] = r.tol_abs;
  j["convexity_violations"] = r.length.convexity_violations;
  j["pass"] = r.pass;
  return j;
}

ojson convergence_json(const incremental::ConvergenceReport& r) {
  ojson j;
  j["t_final"] = r.times.empty() ? 0.0 : r.times.back();
  j["gap_initial"] = r.gap.empty() ? 0.0 : r.gap.front();
  j["gap_final"] = r.gap.empty() ? 0.0 : r.gap.back();
  j["ratio"] = r.ratio;
  j["tol"] = r.tol;
  j["s"] = vec_json(r.s);
  j["output_energy"] = vec_json(r.output_energy);
  j["initial_storage"] = vec_json(r.initial_storage);
  j["integral_bound_ok"] = r.integral_bound_ok;
  j["min_w_eigenvalue"] = r.min_w_eigenvalue;
  j["w_flag"] = r.w_flag;
  j["pass"] = r.pass;
  return j;
}

}  // namespace diffpass::cli
