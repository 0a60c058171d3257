// campus_notify: run the notification service, seed data, replay scenarios
// and drive the simulated readers.
//
// Exit codes: 0 success, 1 operational failure, 2 script/validation failure.

#include <httplib.h>
#include <signal.h>

#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

#include "campus/error.hpp"
#include "campus/json_codec.hpp"
#include "campus/notification_store.hpp"
#include "campus/reader_gateway.hpp"
#include "campus/scenario.hpp"
#include "campus/service_api.hpp"

namespace {

using namespace campus;
using codec::json;

constexpr int kOk = 0;
constexpr int kOperational = 1;
constexpr int kValidation = 2;

enum class LogLevel { error, warn, info, debug };

struct CliConfig {
  std::string data_path = "campus.db";
  std::string listen_address = "127.0.0.1:8080";
  std::string clock_mode = "wall";  // "wall" or an RFC 3339 instant to pin to
  LogLevel log_level = LogLevel::info;
};

LogLevel g_level = LogLevel::info;

void log(LogLevel level, const std::string& message) {
  if (level > g_level) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::not_found:
      return kOperational;
    default:
      return kValidation;
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot read '" + path + "'", "path");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::string, int> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::parse_error, "address must be host:port", "listen");
  int port = 0;
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(Errc::parse_error, "bad port in '" + address + "'", "listen");
  }
  return {address.substr(0, colon), port};
}

std::optional<Instant> pinned_instant(const CliConfig& config) {
  if (config.clock_mode == "wall") return std::nullopt;
  return parse_rfc3339(config.clock_mode);
}

std::unique_ptr<NotificationStore> open_store(const CliConfig& config) {
  try {
    return std::make_unique<NotificationStore>(config.data_path);
  } catch (const Error& e) {
    if (e.code() == Errc::not_found) throw;
    throw Error(e.code(), "data file '" + config.data_path + "' is corrupt: " + e.what(), e.field());
  }
}

void print_report(const SeedReport& r) {
  std::cout << "profiles: " << r.profiles << "\nreaders: " << r.readers << "\nnotifications: " << r.notifications
            << "\nread_states: " << r.read_states << "\nnew records: " << r.added << '\n';
}

// --------------------------------------------------------------------------

int cmd_serve(const CliConfig& config, bool allow_pinned) {
  const auto pinned = pinned_instant(config);
  if (pinned && !allow_pinned) {
    log(LogLevel::error, "a pinned clock needs --allow-pinned-serve");
    return kValidation;
  }
  const auto [host, port] = split_address(config.listen_address);

  // Block the shutdown signals before any thread exists; one thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto store = open_store(config);
  WallClock wall;
  PinnedClock fixed(pinned.value_or(Instant{}));
  const Clock& clock = pinned ? static_cast<const Clock&>(fixed) : wall;

  ServiceApi api(*store, clock, ServiceOptions{.allow_now_override = pinned.has_value()});
  httplib::Server server;
  api.mount(server);
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    log(LogLevel::debug, req.method + " " + req.path + " -> " + std::to_string(res.status));
  });

  if (!server.bind_to_port(host, port)) {
    log(LogLevel::error, "cannot listen on " + config.listen_address);
    return kOperational;
  }

  std::atomic<bool> signalled{false};
  std::thread waiter([&server, &signalled, signals] {
    int received = 0;
    sigwait(&signals, &received);
    signalled = true;
    server.stop();
  });

  log(LogLevel::info, "serving on http://" + config.listen_address + " with data " + config.data_path);
  const bool clean = server.listen_after_bind();
  // listen can also return on its own; wake the waiter so it can be joined.
  if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  store.reset();
  log(LogLevel::info, "stopped");
  return clean ? kOk : kOperational;
}

int cmd_seed(const CliConfig& config, const std::string& fixture) {
  const std::string text = fixture == "campus" && !std::ifstream(fixture) ? bundled_campus_fixture() : read_text(fixture);
  auto store = open_store(config);
  print_report(store->seed(text));
  return kOk;
}

int cmd_import(const CliConfig& config, const std::string& path) {
  const std::string text = read_text(path);
  auto store = open_store(config);
  print_report(store->import_records(text));
  return kOk;
}

int cmd_export(const CliConfig& config, const std::string& out_path) {
  auto store = open_store(config);
  const std::string dump = store->export_records();
  if (out_path.empty() || out_path == "-") {
    std::cout << dump;
    return kOk;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  out << dump;
  if (!out) {
    log(LogLevel::error, "cannot write '" + out_path + "'");
    return kOperational;
  }
  return kOk;
}

int cmd_scenario(const std::string& name_or_path, bool as_json) {
  std::string text;
  if (auto bundled = bundled_scenario(name_or_path)) {
    text = *bundled;
  } else {
    try {
      text = read_text(name_or_path);
    } catch (const Error& e) {
      log(LogLevel::error, std::string(e.what()) + " (bundled scenarios: jen, farris, worked_example)");
      return kValidation;
    }
  }
  const auto script = parse_scenario(text);
  const auto report = run_scenario(script);
  if (as_json)
    std::cout << report.to_json().dump(2) << '\n';
  else
    std::cout << report.to_text();
  return report.passed() ? kOk : kValidation;
}

std::vector<TagDetectionEvent> load_plan(const std::string& path) {
  const json doc = codec::parse(read_text(path));
  if (!doc.is_array()) throw Error(Errc::parse_error, "plan must be a JSON array of events", "plan");
  std::vector<TagDetectionEvent> plan;
  for (const auto& e : doc) plan.push_back(codec::decode_event(e));
  return plan;
}

std::vector<TagDetectionEvent> generate_plan(const NotificationStore& store, std::size_t count, unsigned seed,
                                             Instant start) {
  const auto profiles = store.profiles();
  const auto readers = store.readers();
  if (profiles.empty() || readers.empty())
    throw Error(Errc::parse_error, "the store needs profiles and readers to generate a plan", "generate");
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_tag(0, profiles.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_reader(0, readers.size() - 1);
  std::vector<TagDetectionEvent> plan;
  plan.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    plan.push_back({profiles[pick_tag(rng)].tag_id, readers[pick_reader(rng)].reader_id,
                    start + std::chrono::seconds{static_cast<long>(i)}, "sim-" + std::to_string(seed) + "-" + std::to_string(i)});
  return plan;
}

int cmd_simulate(const CliConfig& config, const std::string& plan_path, std::size_t generate, unsigned seed,
                 const std::string& target, const std::string& pacing_name, bool as_json) {
  const Pacing pacing = pacing_name == "real-time" ? Pacing::real_time : Pacing::as_fast_as_possible;
  auto store = open_store(config);
  const Instant start = pinned_instant(config).value_or(WallClock{}.now());
  const auto plan = plan_path.empty() ? generate_plan(*store, generate, seed, start) : load_plan(plan_path);

  std::vector<SimulationRecord> records;
  if (!target.empty()) {
    const auto [host, port] = split_address(target);
    records = simulate_readers(plan, pacing, http_transport(host, port));
  } else {
    // Local server on an ephemeral port whose clock follows the plan.
    PinnedClock clock(start);
    ServiceApi api(*store, clock);
    httplib::Server server;
    api.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) {
      log(LogLevel::error, "cannot open a local port for the simulator");
      return kOperational;
    }
    std::thread runner([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
    records = simulate_readers(plan, pacing, http_transport("127.0.0.1", port), {},
                               [&clock](const TagDetectionEvent& e) { clock.set(e.timestamp); });
    server.stop();
    runner.join();
  }

  std::size_t errors = 0;
  std::size_t shown = 0;
  for (const auto& r : records) {
    if (r.error_code) ++errors;
    if (r.payload) shown += r.payload->entries.size();
    if (as_json) {
      json line = {{"event", codec::encode(r.event)}};
      if (r.payload) line["payload"] = codec::encode(*r.payload);
      if (r.error_code) line["error"] = {{"code", *r.error_code}, {"message", r.error_message}};
      std::cout << line.dump() << '\n';
    }
  }
  std::cerr << records.size() << " events, " << records.size() - errors << " payloads, " << errors
            << " errors, " << shown << " entries displayed\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware campus notification service"};
  app.require_subcommand(1);

  CliConfig config;
  if (const char* env = std::getenv("CAMPUS_NOTIFY_DATA"); env && *env) config.data_path = env;
  std::string level = "info";

  app.add_option("--data", config.data_path, "Store file (env CAMPUS_NOTIFY_DATA)");
  app.add_option("--clock", config.clock_mode, "'wall' or an RFC 3339 instant to pin the clock to");
  app.add_option("--log-level", level, "error | warn | info | debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  auto* serve = app.add_subcommand("serve", "Run the HTTP service until SIGINT/SIGTERM");
  bool allow_pinned = false;
  serve->add_option("--listen", config.listen_address, "host:port");
  serve->add_flag("--allow-pinned-serve", allow_pinned, "Permit --clock pinning and the feed now override");

  auto* seed = app.add_subcommand("seed", "Merge a fixture in store export format");
  std::string fixture;
  seed->add_option("fixture", fixture, "Fixture path, or 'campus' for the bundled demo data")->required();

  auto* scenario = app.add_subcommand("scenario", "Run a scenario script");
  std::string scenario_name;
  bool scenario_json = false;
  scenario->add_option("name", scenario_name, "Bundled name (jen, farris, worked_example) or a path")->required();
  scenario->add_flag("--json", scenario_json, "Machine-readable report");

  auto* simulate = app.add_subcommand("simulate", "Replay detection events through the wire protocol");
  std::string plan_path;
  std::size_t generate = 1000;
  unsigned rng_seed = 1;
  std::string target;
  std::string pacing = "fast";
  bool simulate_json = false;
  simulate->add_option("--plan", plan_path, "JSON array of events; when absent a random plan is generated");
  simulate->add_option("--generate", generate, "Number of random events to generate");
  simulate->add_option("--seed", rng_seed, "Generator seed");
  simulate->add_option("--target", target, "host:port of a running server (default: local in-process server)");
  simulate->add_option("--pacing", pacing, "real-time | fast")->check(CLI::IsMember({"real-time", "fast"}));
  simulate->add_flag("--json", simulate_json, "Print one JSON line per event");

  auto* exporter = app.add_subcommand("export", "Write the store in export format");
  std::string export_path;
  exporter->add_option("--out", export_path, "Output file (default stdout)");

  auto* importer = app.add_subcommand("import", "Replace the store with an export file");
  std::string import_path;
  importer->add_option("file", import_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  g_level = level == "error" ? LogLevel::error
            : level == "warn" ? LogLevel::warn
            : level == "debug" ? LogLevel::debug
                               : LogLevel::info;
  config.log_level = g_level;

  try {
    if (!serve->parsed() && !simulate->parsed() && !scenario->parsed() && config.clock_mode != "wall") {
      log(LogLevel::error, "--clock only applies to serve, simulate and scenario");
      return kValidation;
    }
    if (*serve) return cmd_serve(config, allow_pinned);
    if (*seed) return cmd_seed(config, fixture);
    if (*scenario) return cmd_scenario(scenario_name, scenario_json);
    if (*simulate) return cmd_simulate(config, plan_path, generate, rng_seed, target, pacing, simulate_json);
    if (*exporter) return cmd_export(config, export_path);
    if (*importer) return cmd_import(config, import_path);
  } catch (const Error& e) {
    log(LogLevel::error, e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what());
    return kOperational;
  }
  return kOk;
}
