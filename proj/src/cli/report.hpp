#pragma once

#include <string>
#include <vector>

#include "diffpass/dissipativity/audit.hpp"
#include "diffpass/dissipativity/certificate.hpp"
#include "diffpass/incremental/incremental.hpp"
#include "diffpass/interconnect/interconnect.hpp"
#include "json.hpp"

namespace diffpass::cli {

using ojson = nlohmann::ordered_json;

/// JSON text with every float printed as %.17g and non-finite values as null.
std::string dump(const ojson& j);

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::string& path, const std::string& content);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::string csv() const;
  [[nodiscard]] ojson to_json() const;
};

/// t, x_1..x_n, dx_1..dx_n, u_1..u_q, du_1..du_q, y_1..y_q, dy_1..dy_q, S, Q, slack.
/// S, Q and slack are NaN when no audit is given.
Table trace_table(const systems::ProlongedTrajectory& traj, const dissipativity::AuditReport* audit);

ojson vec_json(const std::vector<double>& v);
ojson audit_json(const dissipativity::AuditReport& r);
ojson certificate_json(const dissipativity::CertificateReport& r);
ojson equalization_json(const interconnect::EqualizationReport& r);
ojson nonexpansion_json(const incremental::NonexpansionReport& r);
ojson convergence_json(const incremental::ConvergenceReport& r);

}  // namespace diffpass::cli
