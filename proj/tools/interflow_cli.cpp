// Command-line front end: replay harness, log verification and the live
// WebSocket server.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "interflow/errors.hpp"
#include "interflow/harness.hpp"
#include "interflow/runtime.hpp"
#include "interflow/script.hpp"
#include "interflow/server.hpp"
#include "interflow/session.hpp"

using namespace interflow;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

Config load_config(const std::string& path, const std::string& backend, const std::vector<std::string>& sets) {
  Config c = path.empty() ? Config{} : Config::load(path);
  if (!backend.empty()) c.backend = backend;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set needs key=value");
    c.set(s.substr(0, eq), s.substr(eq + 1));
  }
  return c;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

std::atomic<bool> g_stop{false};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"InterFlow interview copilot engine"};
  app.require_subcommand(1);

  std::string script, transcript, annotations, config_path, backend, format = "table", log_out, snapshot_out;
  std::vector<std::string> sweeps, sets;

  auto* run = app.add_subcommand("run", "Replay a recorded session on virtual time and report metrics");
  run->add_option("--script", script, "Interview script file")->required()->check(CLI::ExistingFile);
  run->add_option("--transcript", transcript, "Replay file (JSON lines)")->required()->check(CLI::ExistingFile);
  run->add_option("--annotations", annotations, "Ground-truth sidecar")->check(CLI::ExistingFile);
  run->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  run->add_option("--backend", backend, "Model backend (overrides the config)");
  run->add_option("--report-format", format, "table or structured")->check(CLI::IsMember({"table", "structured"}));
  run->add_option("--sweep", sweeps, "key=v1,v2,... (repeatable; cartesian product)");
  run->add_option("--set", sets, "key=value config override (repeatable)");
  run->add_option("--log", log_out, "Write the event log here");
  run->add_option("--snapshot", snapshot_out, "Write the final snapshot here");

  std::string log_in;
  auto* verify = app.add_subcommand("replay-log", "Rebuild a session from its event log and print the snapshot");
  verify->add_option("--log", log_in, "Event log")->required()->check(CLI::ExistingFile);

  auto* parse = app.add_subcommand("parse-script", "Parse a script and print its canonical form");
  parse->add_option("--script", script, "Interview script file")->required()->check(CLI::ExistingFile);
  parse->add_option("--config", config_path, "Config file (backend for free-form scripts)")->check(CLI::ExistingFile);

  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  auto* serve = app.add_subcommand("serve", "Run a live session behind a WebSocket endpoint");
  serve->add_option("--script", script, "Interview script file")->required()->check(CLI::ExistingFile);
  serve->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  serve->add_option("--backend", backend, "Model backend (overrides the config)");
  serve->add_option("--set", sets, "key=value config override (repeatable)");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--log", log_out, "Event log path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = load_config(config_path, backend, sets);
      auto text = read_file(script);
      auto records = load_replay_file(transcript);
      std::optional<Annotations> ann;
      if (!annotations.empty()) ann = load_annotations(annotations);
      if (!sweeps.empty()) {
        std::vector<SweepAxis> grid;
        for (const auto& s : sweeps) grid.push_back(parse_sweep(s));
        auto results = interflow::sweep(text, records, config, grid, ann);
        if (format == "structured") {
          json out = json::array();
          for (const auto& r : results) out.push_back({{"overrides", r.overrides}, {"report", to_json(r.report)}});
          std::cout << out.dump(2) << '\n';
        } else {
          for (const auto& r : results) {
            std::cout << "==";
            for (const auto& [k, v] : r.overrides) std::cout << ' ' << k << '=' << v;
            std::cout << "\n" << format_table(r.report) << '\n';
          }
        }
        return 0;
      }
      auto out = run_session(text, records, config, ann);
      if (!log_out.empty()) write_lines(log_out, out.log);
      if (!snapshot_out.empty()) write_lines(snapshot_out, {out.snapshot.dump()});
      std::cout << (format == "structured" ? format_structured(out.report) : format_table(out.report)) << '\n';
      return 0;
    }
    if (*verify) {
      auto session = Session::replay(read_lines(log_in));
      std::cout << session->snapshot().dump(2) << '\n';
      return 0;
    }
    if (*parse) {
      auto config = load_config(config_path, "", {});
      auto gateway = make_gateway(config);
      std::cout << serialize_script(load_script(read_file(script), gateway.get()));
      return 0;
    }
    if (*serve) {
      auto config = load_config(config_path, backend, sets);
      auto session = Session::create(read_file(script), config, make_gateway(config), 0);
      LiveRuntime runtime(*session, log_out);
      WebSocketServer server(runtime, address, port);
      runtime.set_listener([&](const std::vector<Outbound>& m) { server.deliver(m); });
      runtime.start();
      server.start();
      std::cerr << "listening on ws://" << address << ':' << server.port() << '\n';
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      runtime.stop();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what();
    if (e.location()) std::cerr << " (at " << *e.location() << ")";
    std::cerr << '\n';
    return 2;
  }
  return 0;
}
