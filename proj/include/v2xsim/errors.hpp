#pragma once

#include <stdexcept>
#include <string>

namespace v2xsim {

// Configuration problems map to CLI exit code 2. `kind` keeps the error classes
// distinct (missing file vs syntax vs unknown key vs bad/out-of-range value) and
// `line` carries the config-file line when one is known (0 = not applicable).
class ConfigError : public std::runtime_error {
 public:
  enum class Kind { MissingFile, Syntax, UnknownKey, BadValue, OutOfRange };

  ConfigError(Kind kind, std::string msg, int line = 0)
      : std::runtime_error(format(kind, msg, line)), kind_(kind), line_(line) {}

  Kind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  static std::string format(Kind kind, const std::string& msg, int line) {
    const char* tag = "config";
    switch (kind) {
      case Kind::MissingFile: tag = "config: file"; break;
      case Kind::Syntax:      tag = "config: syntax"; break;
      case Kind::UnknownKey:  tag = "config: unknown key"; break;
      case Kind::BadValue:    tag = "config: bad value"; break;
      case Kind::OutOfRange:  tag = "config: out of range"; break;
    }
    std::string out = std::string(tag) + ": " + msg;
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    return out;
  }

  Kind kind_;
  int line_;
};

// Scenario construction failures (e.g. no street area to drop participants on).
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& msg)
      : std::runtime_error("scenario: " + msg) {}
};

// Latency bookkeeping handed an incomplete or inconsistent trace.
class AccountingError : public std::logic_error {
 public:
  explicit AccountingError(const std::string& msg)
      : std::logic_error("latency accounting: " + msg) {}
};

}  // namespace v2xsim
