#include "json_util.hpp"

#include <algorithm>
#include <cmath>

namespace peerbargain::detail {

ordered_json parse_json_text(std::string_view text, const std::string& origin) {
  try {
    return ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ParseError(origin, line, column, what);
  }
}

std::string child_path(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

std::string index_path(const std::string& parent, std::size_t index) {
  return parent + "[" + std::to_string(index) + "]";
}

void Reader::fail(const std::string& path, const std::string& what) const {
  throw ParseError(origin_, path.empty() ? std::string("<root>") : path, what);
}

const ordered_json& Reader::object(const ordered_json& j, const std::string& path) const {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

const ordered_json& Reader::array(const ordered_json& j, const std::string& path) const {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

void Reader::only_fields(const ordered_json& j, const std::string& path,
                         std::initializer_list<std::string_view> allowed) const {
  object(j, path);
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      fail(child_path(path, item.key()), "unknown field");
  }
}

const ordered_json& Reader::field(const ordered_json& j, const std::string& path, std::string_view key) const {
  const ordered_json* f = optional_field(j, key);
  if (!f) fail(child_path(path, key), "missing required field");
  return *f;
}

const ordered_json* Reader::optional_field(const ordered_json& j, std::string_view key) const {
  auto it = j.find(std::string(key));
  return it == j.end() ? nullptr : &*it;
}

double Reader::number(const ordered_json& j, const std::string& path) const {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::string Reader::string(const ordered_json& j, const std::string& path) const {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

bool Reader::boolean(const ordered_json& j, const std::string& path) const {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::size_t Reader::count(const ordered_json& j, const std::string& path) const {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

double Reader::number_field(const ordered_json& j, const std::string& path, std::string_view key) const {
  return number(field(j, path, key), child_path(path, key));
}

double Reader::number_field(const ordered_json& j, const std::string& path, std::string_view key,
                            double fallback) const {
  const ordered_json* f = optional_field(j, key);
  return f ? number(*f, child_path(path, key)) : fallback;
}

std::optional<double> Reader::optional_number(const ordered_json& j, const std::string& path,
                                              std::string_view key) const {
  const ordered_json* f = optional_field(j, key);
  if (!f || f->is_null()) return std::nullopt;
  return number(*f, child_path(path, key));
}

std::string Reader::string_field(const ordered_json& j, const std::string& path, std::string_view key) const {
  return string(field(j, path, key), child_path(path, key));
}

std::string Reader::string_field(const ordered_json& j, const std::string& path, std::string_view key,
                                 const std::string& fallback) const {
  const ordered_json* f = optional_field(j, key);
  return f ? string(*f, child_path(path, key)) : fallback;
}

bool Reader::bool_field(const ordered_json& j, const std::string& path, std::string_view key, bool fallback) const {
  const ordered_json* f = optional_field(j, key);
  return f ? boolean(*f, child_path(path, key)) : fallback;
}

}  // namespace peerbargain::detail
