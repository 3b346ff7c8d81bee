#pragma once

#include <stdexcept>
#include <string>

namespace calib {

// Process exit codes used by the command-line frontend.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  parse = 2,
  validation = 3,
  missing_split = 4,
  config = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Malformed input file (bad CSV row, bad JSON, wrong column count).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ExitCode::parse, what) {}
};

// Input parsed but violates a data invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ExitCode::validation, what) {}
};

// A required split (e.g. validation) or logits are absent.
class MissingSplitError : public Error {
 public:
  explicit MissingSplitError(const std::string& what) : Error(ExitCode::missing_split, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

}  // namespace calib
