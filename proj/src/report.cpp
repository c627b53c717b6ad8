#include "peerbargain/report.hpp"

#include <fmt/format.h>

#include "json_util.hpp"

namespace peerbargain {

using detail::ordered_json;

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "markdown") return ReportFormat::markdown;
  throw ModelError("unknown output format '" + std::string(name) + "'");
}

namespace {

ordered_json cell_to_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return v;
        }
      },
      c);
}

Cell cell_from_json(const detail::Reader& r, const ordered_json& j, const std::string& path) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_string()) return j.get<std::string>();
  return r.number(j, path);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, double>) {
          return fmt::format("{}", v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return csv_escape(v);
        }
      },
      c);
}

std::string md_cell(const Cell& c, const std::string& column) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "n/a";
        } else if constexpr (std::is_same_v<T, double>) {
          if (column == "beta" || column == "theta" || column == "focal_position") return fmt::format("{}", v);
          return fmt::format("{:.2f}", v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "yes" : "no";
        } else {
          return v;
        }
      },
      c);
}

/// Run results flattened to the columns a spreadsheet user wants.
ResultTable run_table(const ScenarioResult& r) {
  const ordered_json& run = *r.run;
  const ordered_json& s = run.at("settlement");
  ResultTable t;
  t.columns = {"isp",
               "csp",
               "services",
               "payment_usd_per_month",
               "deal",
               "surplus_usd_per_month",
               "v_isp_before_usd_per_month",
               "v_isp_after_usd_per_month",
               "v_csp_before_usd_per_month",
               "v_csp_after_usd_per_month",
               "traffic_gbps_before",
               "traffic_gbps_after",
               "price_usd_per_gbps_month"};
  std::string services;
  for (const auto& id : run.at("focal").at("services")) services += (services.empty() ? "" : ";") + id.get<std::string>();
  auto num = [](const ordered_json& j) { return j.is_null() ? Cell(std::monostate{}) : Cell(j.get<double>()); };
  t.rows.push_back({run.at("focal").at("isp").get<std::string>(), run.at("focal").at("csp").get<std::string>(), services,
                    num(s.at("payment_usd_per_month")), s.at("deal").get<bool>(), num(s.at("surplus_usd_per_month")),
                    num(s.at("v_isp_before_usd_per_month")), num(s.at("v_isp_after_usd_per_month")),
                    num(s.at("v_csp_before_usd_per_month")), num(s.at("v_csp_after_usd_per_month")),
                    num(s.at("traffic_gbps_before")), num(s.at("traffic_gbps_after")),
                    num(s.at("price_usd_per_gbps_month"))});
  return t;
}

std::string render_csv(const ResultTable& t) {
  std::string out;
  for (std::size_t k = 0; k < t.columns.size(); ++k) out += (k ? "," : "") + csv_escape(t.columns[k]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + csv_cell(row[k]);
    out += "\n";
  }
  return out;
}

std::string render_markdown_table(const ResultTable& t) {
  std::string out = "|";
  for (const auto& c : t.columns) out += " " + c + " |";
  out += "\n|";
  for (std::size_t k = 0; k < t.columns.size(); ++k) out += " --- |";
  out += "\n";
  for (const auto& row : t.rows) {
    out += "|";
    for (std::size_t k = 0; k < row.size(); ++k) out += " " + md_cell(row[k], t.columns[k]) + " |";
    out += "\n";
  }
  return out;
}

std::string scalar_text(const ordered_json& j) {
  if (j.is_null()) return "n/a";
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "yes" : "no";
  if (j.is_number_integer() || j.is_number_unsigned()) return j.dump();
  if (j.is_number_float()) return fmt::format("{:.2f}", j.get<double>());
  return j.dump();
}

std::string render_markdown(const ScenarioResult& r) {
  std::string out = "# " + (r.scenario.empty() ? r.kind : r.scenario) + "\n\n";
  out += "Kind: " + r.kind + ". Dataset: " + r.dataset + ".\n\n";
  out += "| parameter | value |\n| --- | --- |\n";
  for (const auto& item : r.parameters.items()) {
    std::string value = item.value().is_array() || item.value().is_object() ? item.value().dump() : scalar_text(item.value());
    if (item.value().is_number_float()) value = fmt::format("{}", item.value().get<double>());
    out += "| " + item.key() + " | " + value + " |\n";
  }
  out += "\n";

  if (r.run) {
    const ordered_json& s = r.run->at("settlement");
    out += "## Settlement\n\n| quantity | value |\n| --- | --- |\n";
    for (const auto& item : s.items()) {
      if (item.value().is_object() || item.value().is_array()) continue;
      out += "| " + item.key() + " | " + scalar_text(item.value()) + " |\n";
    }
    for (const char* party : {"isp_before", "isp_after", "csp_before", "csp_after"}) {
      out += "| " + std::string(party) + ".profit_usd_per_month | " +
             scalar_text(s.at(party).at("profit_usd_per_month")) + " |\n";
    }
    out += "\n## Per-service split\n\n";
    ResultTable per;
    per.columns = {"service", "payment_usd_per_month", "traffic_gbps_before", "traffic_gbps_after",
                   "price_usd_per_gbps_month"};
    for (const auto& row : s.at("services")) {
      auto num = [](const ordered_json& j) { return j.is_null() ? Cell(std::monostate{}) : Cell(j.get<double>()); };
      per.rows.push_back({row.at("service").get<std::string>(), num(row.at("payment_usd_per_month")),
                          num(row.at("traffic_gbps_before")), num(row.at("traffic_gbps_after")),
                          num(row.at("price_usd_per_gbps_month"))});
    }
    out += render_markdown_table(per);
    out += "\n## Populations\n\n";
    ResultTable pop;
    pop.columns = {"isp", "initial", "final"};
    for (const auto& row : r.run->at("populations"))
      pop.rows.push_back({row.at("isp").get<std::string>(), row.at("initial").get<double>(), row.at("final").get<double>()});
    out += render_markdown_table(pop);
  }
  if (r.table) out += render_markdown_table(*r.table);
  if (!r.notes.empty()) {
    out += "\n";
    for (const auto& n : r.notes) out += "- " + n + "\n";
  }
  return out;
}

}  // namespace

ordered_json result_to_json(const ScenarioResult& r) {
  ordered_json out;
  out["schema_version"] = 1;
  out["kind"] = r.kind;
  out["scenario"] = r.scenario;
  out["dataset"] = r.dataset;
  out["parameters"] = r.parameters;
  if (r.run) out["run"] = *r.run;
  if (r.table) {
    auto rows = ordered_json::array();
    for (const auto& row : r.table->rows) {
      auto cells = ordered_json::array();
      for (const auto& c : row) cells.push_back(cell_to_json(c));
      rows.push_back(std::move(cells));
    }
    out["table"] = {{"columns", r.table->columns}, {"rows", std::move(rows)}};
  }
  out["notes"] = r.notes;
  return out;
}

ScenarioResult result_from_json(const ordered_json& doc) {
  const detail::Reader r("result");
  r.only_fields(doc, "", {"schema_version", "kind", "scenario", "dataset", "parameters", "run", "table", "notes"});
  ScenarioResult out;
  out.kind = r.string_field(doc, "", "kind");
  out.scenario = r.string_field(doc, "", "scenario");
  out.dataset = r.string_field(doc, "", "dataset");
  out.parameters = r.object(r.field(doc, "", "parameters"), "parameters");
  if (const auto* run = r.optional_field(doc, "run")) out.run = r.object(*run, "run");
  if (const auto* t = r.optional_field(doc, "table")) {
    r.only_fields(*t, "table", {"columns", "rows"});
    ResultTable table;
    const auto& columns = r.array(r.field(*t, "table", "columns"), "table.columns");
    for (std::size_t k = 0; k < columns.size(); ++k) table.columns.push_back(r.string(columns[k], detail::index_path("table.columns", k)));
    const auto& rows = r.array(r.field(*t, "table", "rows"), "table.rows");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::string p = detail::index_path("table.rows", k);
      r.array(rows[k], p);
      std::vector<Cell> row;
      for (std::size_t j = 0; j < rows[k].size(); ++j) row.push_back(cell_from_json(r, rows[k][j], detail::index_path(p, j)));
      table.rows.push_back(std::move(row));
    }
    out.table = std::move(table);
  }
  const auto& notes = r.array(r.field(doc, "", "notes"), "notes");
  for (std::size_t k = 0; k < notes.size(); ++k) out.notes.push_back(r.string(notes[k], detail::index_path("notes", k)));
  return out;
}

std::string emit_report(const ScenarioResult& result, ReportFormat format) {
  switch (format) {
    case ReportFormat::json:
      return result_to_json(result).dump(2) + "\n";
    case ReportFormat::csv:
      return render_csv(result.table ? *result.table : run_table(result));
    case ReportFormat::markdown:
      return render_markdown(result);
  }
  throw ModelError("unknown output format");
}

}  // namespace peerbargain
