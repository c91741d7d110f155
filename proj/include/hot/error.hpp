#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hot {

enum class ErrorCode {
  usage,
  io,
  parse,
  validation,
  range,
  planning,
  protocol,
  phase_mismatch,
  run_failed,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorCode::usage, what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error(ErrorCode::range, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

/// Scenario parse/validation failure. `field()` names the offending entry.
class ScenarioError : public Error {
 public:
  ScenarioError(ErrorCode code, std::string field, const std::string& what, int line = 0)
      : Error(code, format(field, what, line)), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& what, int line) {
    std::string s;
    if (line > 0) s += "line " + std::to_string(line) + ": ";
    s += field + ": " + what;
    return s;
  }
  std::string field_;
  int line_;
};

enum class PlanningCause {
  blocked_start,
  blocked_goal,
  inflation,
  prior_paths,
};

const char* to_string(PlanningCause cause);

/// Planning failure; carries the start cell's connected component for diagnostics.
class PlanningError : public Error {
 public:
  PlanningError(const std::string& what, int trap_id, PlanningCause cause,
                std::vector<bool> component = {})
      : Error(ErrorCode::planning, what),
        trap_id_(trap_id),
        cause_(cause),
        component_(std::move(component)) {}
  int trap_id() const noexcept { return trap_id_; }
  PlanningCause cause() const noexcept { return cause_; }
  /// Row-major mask (53 x 40) of cells reachable from the start; empty if unknown.
  const std::vector<bool>& component() const noexcept { return component_; }

 private:
  int trap_id_;
  PlanningCause cause_;
  std::vector<bool> component_;
};

enum class ProtocolFault {
  bad_magic,
  bad_version,
  truncated,
  length_mismatch,
  unknown_kind,
  too_many_traps,
};

const char* to_string(ProtocolFault fault);

class ProtocolError : public Error {
 public:
  ProtocolError(ProtocolFault fault, const std::string& what)
      : Error(ErrorCode::protocol, what), fault_(fault) {}
  ProtocolFault fault() const noexcept { return fault_; }

 private:
  ProtocolFault fault_;
};

class PhaseMismatchError : public Error {
 public:
  explicit PhaseMismatchError(const std::string& what) : Error(ErrorCode::phase_mismatch, what) {}
};

}  // namespace hot
