#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gsn {

// Error taxonomy shared by every module. The CLI maps category() onto the
// machine-parsable "error:<category>:" prefix and the process exit code.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

private:
  std::string category_;
};

// Dimension or shape disagreement between operands.
class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

// Invalid configuration value, dataset precondition, or out-of-range knob.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

// Scalar argument outside its mathematical domain.
class DomainError : public Error {
public:
  explicit DomainError(const std::string& m) : Error("domain", m) {}
};

// Malformed file contents (bad magic, truncation, corrupt payload).
class FormatError : public Error {
public:
  explicit FormatError(const std::string& m) : Error("format", m) {}
};

// Operation called out of order (e.g. backward without a recorded forward).
class StateError : public Error {
public:
  explicit StateError(const std::string& m) : Error("state", m) {}
};

// Dataset ingestion failure; messages carry the offending line number.
class IngestError : public Error {
public:
  explicit IngestError(const std::string& m) : Error("ingest", m) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace gsn
