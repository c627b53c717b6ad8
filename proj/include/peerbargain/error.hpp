#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace peerbargain {

/// One offending field in a dataset or scenario document. `path` uses
/// dotted/indexed notation, e.g. `csps[2].service_shares.video`.
struct Violation {
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that parses but breaks a semantic rule. Never silently fixed.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  ValidationError(std::string path, std::string message);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Malformed document text (not JSON, wrong types, unknown fields).
class ParseError : public Error {
 public:
  ParseError(std::string origin, std::size_t line, std::size_t column, const std::string& what);
  ParseError(std::string origin, std::string field, const std::string& what);

  const std::string& origin() const noexcept { return origin_; }
  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string origin_;
  std::string field_;
  std::size_t line_ = 0;
  std::size_t column_ = 0;
};

/// Operation on valid data that cannot be carried out (unknown id,
/// undefined price, unsupported transition).
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace peerbargain
