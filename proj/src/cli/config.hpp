#pragma once

// Experiment config files. Every schema violation is reported with the JSON
// pointer of the offending value.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diffpass/dissipativity/certificate.hpp"
#include "diffpass/dissipativity/storage.hpp"
#include "diffpass/interconnect/interconnect.hpp"
#include "diffpass/models/models.hpp"
#include "json.hpp"

namespace diffpass::cli {

using json = nlohmann::json;
using numerics::Matrix;
using numerics::Vector;

class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : InvalidArgument("config error at " + (pointer.empty() ? std::string("/") : pointer) + ": " + message),
        pointer_(std::move(pointer)),
        message_(message) {}
  [[nodiscard]] const std::string& pointer() const { return pointer_; }
  [[nodiscard]] const std::string& message() const { return message_; }

 private:
  std::string pointer_;
  std::string message_;
};

/// Read-only view of a JSON value that remembers its pointer.
class Cursor {
 public:
  Cursor(const json& j, std::string pointer) : j_(&j), ptr_(std::move(pointer)) {}

  [[nodiscard]] const std::string& pointer() const { return ptr_; }
  [[nodiscard]] const json& raw() const { return *j_; }
  [[nodiscard]] bool has(const std::string& key) const;
  [[nodiscard]] Cursor at(const std::string& key) const;
  [[nodiscard]] std::optional<Cursor> find(const std::string& key) const;
  [[nodiscard]] std::vector<Cursor> items() const;
  /// Rejects keys outside `allowed`.
  void only(const std::vector<std::string>& allowed) const;

  [[nodiscard]] double number() const;
  [[nodiscard]] std::uint64_t count() const;
  [[nodiscard]] std::string str() const;
  [[nodiscard]] Vector vector() const;
  [[nodiscard]] Matrix matrix() const;
  /// A string or a number, as expression text.
  [[nodiscard]] std::string expr_text() const;

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(ptr_, message); }

 private:
  const json* j_;
  std::string ptr_;
};

json load_json(const std::string& path);

/// Values from the "run" block, after command-line overrides.
struct RunSpec {
  std::optional<Vector> x0, dx0, x0_b;
  std::optional<systems::SignalVec> u, du;
  std::optional<double> t_final, dt, sample_dt, tol;
  std::string stepper = "rk4";
  double rk45_tol = 1e-8;
  std::uint64_t seed = 0;
  std::size_t n_s = 9;
  std::string finsler = "storage";
  std::optional<dissipativity::GridSpec> grid;
  std::optional<Matrix> pi;
  std::vector<Vector> inputs;
};

/// A system with optional storage and supply, plus the registry demo it came
/// from (if any) for default inputs and initial states.
struct SystemSpec {
  dissipativity::PassiveSystem sys;
  bool has_storage = false;
  bool has_supply = false;
  std::optional<models::Demo> demo;
};

/// system / storage / supply blocks of one config object. `overrides` are
/// key=value pairs applied to registry models.
SystemSpec parse_system_block(const Cursor& root, const std::map<std::string, std::string>& overrides);

RunSpec parse_run(const Cursor& run, std::size_t n, std::size_t q);

/// Expression-defined feedback map k(x) with q outputs over the given states.
numerics::VecField parse_feedback(const Cursor& c, const std::vector<std::string>& states, std::size_t q);

}  // namespace diffpass::cli
