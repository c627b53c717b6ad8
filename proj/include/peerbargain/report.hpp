#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "peerbargain/scenario.hpp"

namespace peerbargain {

enum class ReportFormat { json, csv, markdown };

/// Throws ModelError for anything but "json", "csv" or "markdown".
ReportFormat parse_report_format(std::string_view name);

nlohmann::ordered_json result_to_json(const ScenarioResult& result);
/// Inverse of result_to_json. Throws ParseError on malformed documents.
ScenarioResult result_from_json(const nlohmann::ordered_json& doc);

/// Deterministic rendering, newline-terminated. Run results render their
/// settlement as a one-row table in csv and as key/value tables in markdown.
std::string emit_report(const ScenarioResult& result, ReportFormat format);

}  // namespace peerbargain
