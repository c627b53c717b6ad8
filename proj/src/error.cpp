#include "peerbargain/error.hpp"

namespace peerbargain {

namespace {

std::string summarize(const std::vector<Violation>& violations) {
  if (violations.empty()) return "validation failed";
  std::string out = violations.front().path + ": " + violations.front().message;
  if (violations.size() > 1) out += " (+" + std::to_string(violations.size() - 1) + " more)";
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(summarize(violations)), violations_(std::move(violations)) {}

ValidationError::ValidationError(std::string path, std::string message)
    : ValidationError(std::vector<Violation>{{std::move(path), std::move(message)}}) {}

ParseError::ParseError(std::string origin, std::size_t line, std::size_t column, const std::string& what)
    : Error(origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      origin_(std::move(origin)),
      line_(line),
      column_(column) {}

ParseError::ParseError(std::string origin, std::string field, const std::string& what)
    : Error(origin + ": " + field + ": " + what), origin_(std::move(origin)), field_(std::move(field)) {}

}  // namespace peerbargain
