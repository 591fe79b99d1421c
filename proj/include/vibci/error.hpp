#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vibci {

/// Base for every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid inputs or configuration. The CLI maps this family to exit code 2.
class ValidationError : public Error {
public:
  using Error::Error;
};

class ParseError : public ValidationError {
public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class DesignError : public Error {
public:
  using Error::Error;
};

class LengthError : public Error {
public:
  using Error::Error;
};

class RangeError : public Error {
public:
  using Error::Error;
};

/// Wraps an error raised inside a pipeline stage, prefixing the stage name.
class StageError : public Error {
public:
  StageError(std::string stage, const std::string& what, bool validation)
      : Error(stage + ": " + what), stage_(std::move(stage)), validation_(validation) {}

  const std::string& stage() const noexcept { return stage_; }
  bool is_validation() const noexcept { return validation_; }

private:
  std::string stage_;
  bool validation_;
};

}  // namespace vibci
