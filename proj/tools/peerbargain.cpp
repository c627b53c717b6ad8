// peerbargain: command-line front end for the peering bargaining model.
//
// Exit codes: 0 success, 1 usage error, 2 invalid dataset or spec,
// 3 runtime failure. Results go to stdout (or --out), diagnostics to stderr.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "peerbargain/api_service.hpp"
#include "peerbargain/dataset.hpp"
#include "peerbargain/report.hpp"
#include "peerbargain/scenario.hpp"

namespace pb = peerbargain;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kRuntime = 3 };

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pb::ParseError(path, "<file>", "cannot open file");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

pb::ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Premium peering bargaining calculator"};
  app.require_subcommand(1);

  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string dataset_ref;
  std::string spec_path;
  std::string format = "json";
  std::string out_path;

  const std::vector<std::pair<std::string, std::string>> scenario_commands = {
      {"run", "Run a scenario and settle the focal peering"},
      {"sweep", "Evaluate the scenario over a loyalty grid"},
      {"price-table", "Per-service bandwidth prices for the focal pair"},
      {"timing", "Compare peering orderings"},
      {"compare", "Same scenario with different focal ISPs"},
  };
  for (const auto& [name, help] : scenario_commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--spec", spec_path, "Scenario file (JSON), '-' for stdin")->required();
    sub->add_option("--dataset", dataset_ref, "Dataset id or path; replaces the spec's dataset");
    sub->add_option("--format", format, "json, csv or markdown")->check(CLI::IsMember({"json", "csv", "markdown"}));
    sub->add_option("--out", out_path, "Write the report here instead of stdout");
  }

  auto* validate_cmd = app.add_subcommand("validate-dataset", "Check a dataset and print its canonical form");
  validate_cmd->add_option("--dataset", dataset_ref, "Dataset id or path")->required();
  validate_cmd->add_option("--out", out_path, "Write the dataset here instead of stdout");

  int port = 8080;
  std::string bind = "127.0.0.1";
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--bind", bind, "Listen address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  auto logger = spdlog::stderr_color_mt("peerbargain");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*serve_cmd) {
      auto catalog = std::make_shared<const pb::DatasetCatalog>(pb::DatasetCatalog::environment_search_dir(), false);
      pb::ApiServer server(std::make_shared<const pb::ApiService>(catalog));
      const int bound = server.bind(bind, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::info("listening on http://{}:{}", bind, bound);
      server.listen();
      g_server = nullptr;
      return kOk;
    }

    const pb::DatasetCatalog catalog(pb::DatasetCatalog::environment_search_dir(), true);

    if (*validate_cmd) {
      const auto dataset = catalog.get(dataset_ref);
      spdlog::info("dataset '{}' is valid", dataset->id);
      write_output(pb::dataset_to_json(*dataset).dump(2) + "\n", out_path);
      return kOk;
    }

    std::string command;
    for (const auto& [name, help] : scenario_commands)
      if (app.got_subcommand(name)) command = name;

    pb::ScenarioSpec spec = pb::parse_scenario(read_text(spec_path), spec_path);
    if (!dataset_ref.empty()) spec.dataset = dataset_ref;
    spdlog::info("{}: scenario '{}'", command, spec.name);
    const pb::ScenarioResult result = pb::run_command(command, spec, catalog);
    for (const auto& note : result.notes) spdlog::debug("note: {}", note);
    write_output(pb::emit_report(result, pb::parse_report_format(format)), out_path);
    return kOk;
  } catch (const pb::ValidationError& e) {
    for (const auto& v : e.violations()) std::cerr << "error[validation] " << v.path << ": " << v.message << "\n";
    return kInvalid;
  } catch (const pb::ParseError& e) {
    std::cerr << "error[parse] " << e.what() << "\n";
    return kInvalid;
  } catch (const pb::ModelError& e) {
    std::cerr << "error[model] " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime] " << e.what() << "\n";
    return kRuntime;
  }
}
