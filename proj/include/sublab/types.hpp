#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sublab {

// Charts are small; vectors and matrices up to this size live on the stack.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorKind {
  Domain,
  Conditioning,
  Escape,
  NoConvergence,
  Contract,
  OutOfRange,
  NotASubmersion,
  Registry,
  Validation,
  Schema,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// A trajectory left the chart; exit_time is the integration time of the last valid state.
class EscapeError : public Error {
 public:
  EscapeError(const std::string& what, double exit_time)
      : Error(ErrorKind::Escape, what + " (exit time " + std::to_string(exit_time) + ")"),
        exit_time_(exit_time) {}

  double exit_time() const noexcept { return exit_time_; }

 private:
  double exit_time_;
};

// Config validation failure; `key` is the offending key, `location` a JSON pointer.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& key, const std::string& location, const std::string& what)
      : Error(ErrorKind::Schema, what + " (key '" + key + "' at '" + location + "')"),
        key_(key),
        location_(location) {}

  const std::string& key() const noexcept { return key_; }
  const std::string& location() const noexcept { return location_; }

 private:
  std::string key_;
  std::string location_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Conditioning: return "conditioning error";
    case ErrorKind::Escape: return "escape error";
    case ErrorKind::NoConvergence: return "no-convergence error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::OutOfRange: return "out-of-range error";
    case ErrorKind::NotASubmersion: return "not-a-submersion error";
    case ErrorKind::Registry: return "registry error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

}  // namespace sublab
