#pragma once

// Strict JSON field access shared by the dataset and scenario readers.

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "peerbargain/error.hpp"

namespace peerbargain::detail {

using ordered_json = nlohmann::ordered_json;

/// Parses `text`; syntax errors become ParseError with line and column.
ordered_json parse_json_text(std::string_view text, const std::string& origin);

std::string child_path(const std::string& parent, std::string_view key);
std::string index_path(const std::string& parent, std::size_t index);

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  const std::string& origin() const noexcept { return origin_; }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const;

  const ordered_json& object(const ordered_json& j, const std::string& path) const;
  const ordered_json& array(const ordered_json& j, const std::string& path) const;
  /// Rejects keys outside `allowed`.
  void only_fields(const ordered_json& j, const std::string& path, std::initializer_list<std::string_view> allowed) const;

  const ordered_json& field(const ordered_json& j, const std::string& path, std::string_view key) const;
  const ordered_json* optional_field(const ordered_json& j, std::string_view key) const;

  double number(const ordered_json& j, const std::string& path) const;
  std::string string(const ordered_json& j, const std::string& path) const;
  bool boolean(const ordered_json& j, const std::string& path) const;
  std::size_t count(const ordered_json& j, const std::string& path) const;

  double number_field(const ordered_json& j, const std::string& path, std::string_view key) const;
  double number_field(const ordered_json& j, const std::string& path, std::string_view key, double fallback) const;
  std::optional<double> optional_number(const ordered_json& j, const std::string& path, std::string_view key) const;
  std::string string_field(const ordered_json& j, const std::string& path, std::string_view key) const;
  std::string string_field(const ordered_json& j, const std::string& path, std::string_view key,
                           const std::string& fallback) const;
  bool bool_field(const ordered_json& j, const std::string& path, std::string_view key, bool fallback) const;

 private:
  std::string origin_;
};

}  // namespace peerbargain::detail
