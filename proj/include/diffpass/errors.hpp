#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace diffpass {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Non-finite derivative, failed eigen-iteration, singular solve.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::optional<std::size_t> column = std::nullopt)
      : Error(what), column_(column) {}

  /// Offending Jacobian column, when the failure came from a derivative.
  [[nodiscard]] std::optional<std::size_t> column() const { return column_; }

 private:
  std::optional<std::size_t> column_;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_good_time)
      : Error(what + " (last good time " + std::to_string(last_good_time) + ")"),
        last_good_time_(last_good_time) {}

  [[nodiscard]] double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

class InvalidSupply : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A supply sample was not finite, so the supply is not integrable along the run.
class SupplyIntegrabilityError : public Error {
 public:
  using Error::Error;
};

class InvalidCertificate : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class AlgebraicLoopError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidFinslerStructure : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A model left the region where its constitutive laws are valid.
class ModelDomainError : public Error {
 public:
  using Error::Error;
};

class FeedforwardConstructionError : public Error {
 public:
  using Error::Error;
};

class UnboundedTrajectoryError : public Error {
 public:
  using Error::Error;
};

}  // namespace diffpass
