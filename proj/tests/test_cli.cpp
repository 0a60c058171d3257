#include <gtest/gtest.h>
#include <httplib.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <json.hpp>
#include <thread>

#include "support/temp_dir.hpp"

namespace {

using campus::testing::slurp;
using campus::testing::TempDir;
using campus::testing::write_file;
using nlohmann::json;

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI through the shell and captures stdout; stderr is discarded.
Run cli(const std::string& args, const std::string& env = {}) {
  const std::string command = env + " timeout 60 " CAMPUS_CLI " " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  Run run;
  std::array<char, 4096> buffer{};
  std::size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) run.out.append(buffer.data(), n);
  const int raw = pclose(pipe);
  run.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return run;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

int free_port() {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof(addr);
  bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  close(fd);
  return ntohs(addr.sin_port);
}

class Daemon {
 public:
  explicit Daemon(std::vector<std::string> args) {
    pid_ = fork();
    if (pid_ == 0) {
      std::vector<char*> argv{const_cast<char*>(CAMPUS_CLI)};
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      if (!freopen("/dev/null", "w", stderr)) _exit(126);
      execv(CAMPUS_CLI, argv.data());
      _exit(127);
    }
  }
  ~Daemon() {
    if (pid_ > 0 && !reaped_) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
  }
  int signal_and_wait(int sig) {
    kill(pid_, sig);
    return wait();
  }
  int wait() {
    int raw = 0;
    waitpid(pid_, &raw, 0);
    reaped_ = true;
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

 private:
  pid_t pid_ = -1;
  bool reaped_ = false;
};

bool wait_healthy(int port) {
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 200; ++i) {
    if (auto r = client.Get("/health"); r && r->status == 200) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  }
  return false;
}

TEST(Cli, BundledScenariosPass) {
  for (const char* name : {"jen", "farris", "worked_example"}) {
    const auto run = cli(std::string("scenario ") + name);
    EXPECT_EQ(run.status, 0) << name << "\n" << run.out;
    EXPECT_NE(run.out.find("all expectations passed"), std::string::npos);
  }
  const auto as_json = cli("scenario jen --json");
  EXPECT_EQ(as_json.status, 0);
  EXPECT_EQ(json::parse(as_json.out).at("passed"), true);
}

TEST(Cli, BrokenScenarioExitsTwo) {
  TempDir dir;
  write_file(dir / "broken.json", R"({"name": "broken", "steps": [
    {"at": "2009-11-05T08:00:00Z", "action": "detect", "payload": {"tag_id": "1", "reader_id": "R-GHOST"}}]})");
  EXPECT_EQ(cli("scenario " + q(dir / "broken.json")).status, 2);
  EXPECT_EQ(cli("scenario " + q(dir / "missing.json")).status, 2);
  write_file(dir / "failing.json", R"({"name": "failing", "steps": [
    {"at": "2009-11-05T08:00:00Z", "action": "seed_profile", "payload": {"tag_id": "1", "course_ids": ["C1"]}},
    {"at": "2009-11-05T08:00:00Z", "action": "seed_reader", "payload": {"reader_id": "R", "location": {"building_name": "B"}}},
    {"at": "2009-11-05T08:00:00Z", "action": "post_notification", "payload": {"ref": "n", "sender": "s", "title": "t",
      "expiry": "2009-11-05 AM 09:00", "targeting": {"course": "C1"}}},
    {"at": "2009-11-05T10:00:00Z", "action": "expect_feed_contains", "payload": {"tag_id": "1", "reader_id": "R", "notification": "n"}}]})");
  EXPECT_EQ(cli("scenario " + q(dir / "failing.json")).status, 2);
}

TEST(Cli, SeedIsIdempotent) {
  TempDir dir;
  const std::string data = "--data " + q(dir / "c.db");
  const auto first = cli(data + " seed campus");
  ASSERT_EQ(first.status, 0);
  EXPECT_NE(first.out.find("profiles: 4"), std::string::npos) << first.out;
  EXPECT_NE(first.out.find("new records: 10"), std::string::npos);
  const std::string before = slurp(dir / "c.db");
  const auto second = cli(data + " seed campus");
  ASSERT_EQ(second.status, 0);
  EXPECT_NE(second.out.find("profiles: 4"), std::string::npos);
  EXPECT_NE(second.out.find("new records: 0"), std::string::npos);
  EXPECT_EQ(slurp(dir / "c.db"), before);
}

TEST(Cli, BadSeedLeavesStoreUntouched) {
  TempDir dir;
  const std::string data = "--data " + q(dir / "c.db");
  ASSERT_EQ(cli(data + " seed campus").status, 0);
  const std::string before = slurp(dir / "c.db");
  std::string fixture = slurp(CAMPUS_FIXTURE_DIR "/campus.jsonl");
  fixture += "{\"kind\":\"profile\",\"tag_id\":\"\"}\n";
  write_file(dir / "bad.jsonl", fixture);
  EXPECT_EQ(cli(data + " seed " + q(dir / "bad.jsonl")).status, 2);
  EXPECT_EQ(slurp(dir / "c.db"), before);
}

TEST(Cli, ExportImportRoundTrip) {
  TempDir dir;
  ASSERT_EQ(cli("--data " + q(dir / "a.db") + " seed campus").status, 0);
  const auto exported = cli("--data " + q(dir / "a.db") + " export");
  ASSERT_EQ(exported.status, 0);
  ASSERT_EQ(cli("--data " + q(dir / "a.db") + " export --out " + q(dir / "dump.jsonl")).status, 0);
  EXPECT_EQ(slurp(dir / "dump.jsonl"), exported.out);
  ASSERT_EQ(cli("--data " + q(dir / "b.db") + " import " + q(dir / "dump.jsonl")).status, 0);
  EXPECT_EQ(cli("--data " + q(dir / "b.db") + " export").out, exported.out);
  EXPECT_EQ(cli("--data " + q(dir / "b.db") + " import " + q(dir / "nope.jsonl")).status, 1);
}

TEST(Cli, DataPathFromEnvironment) {
  TempDir dir;
  ASSERT_EQ(cli("seed campus", "CAMPUS_NOTIFY_DATA=" + q(dir / "env.db")).status, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "env.db"));
  ASSERT_EQ(cli("--data " + q(dir / "flag.db") + " seed campus", "CAMPUS_NOTIFY_DATA=" + q(dir / "other.db")).status,
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "flag.db"));
  EXPECT_FALSE(std::filesystem::exists(dir / "other.db"));
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  TempDir dir;
  EXPECT_EQ(cli("--data " + q(dir / "x.db") + " --clock 2009-11-05T10:00:00Z export").status, 2);
  EXPECT_EQ(cli("--data " + q(dir / "x.db") + " --clock 2009-11-05T10:00:00Z serve").status, 2);
}

TEST(Cli, SimulateAgainstLocalServer) {
  TempDir dir;
  const std::string data = "--data " + q(dir / "c.db");
  ASSERT_EQ(cli(data + " seed campus").status, 0);
  const auto run = cli(data + " --clock 2030-06-01T12:00:00Z simulate --generate 25 --seed 7 --json");
  ASSERT_EQ(run.status, 0);
  std::istringstream lines(run.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const json j = json::parse(line);
    EXPECT_TRUE(j.contains("payload")) << line;
    ++count;
  }
  EXPECT_EQ(count, 25);
}

TEST(Cli, ServeOnOccupiedPortFails) {
  httplib::Server blocker;
  blocker.set_socket_options([](socket_t) {});
  const int port = blocker.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  TempDir dir;
  EXPECT_EQ(cli("--data " + q(dir / "c.db") + " serve --listen 127.0.0.1:" + std::to_string(port)).status, 1);
}

TEST(Cli, ServeFlushesOnSignal) {
  for (int sig : {SIGINT, SIGTERM}) {
    TempDir dir;
    const auto db = (dir / "c.db").string();
    ASSERT_EQ(cli("--data " + q(db) + " seed campus").status, 0);
    const int port = free_port();
    Daemon daemon({"--data", db, "serve", "--listen", "127.0.0.1:" + std::to_string(port)});
    ASSERT_TRUE(wait_healthy(port));

    httplib::Client client("127.0.0.1", port);
    const json body = {{"title", "Library closes early"},
                       {"expiry", "2099-01-01 PM 11:00"},
                       {"targeting", {{"broadcast", "Book"}}}};
    const auto created = client.Post("/notifications", {{"X-Sender", "Library Office"}}, body.dump(),
                                     "application/json");
    ASSERT_TRUE(created);
    ASSERT_EQ(created->status, 201) << created->body;
    EXPECT_EQ(daemon.signal_and_wait(sig), 0);

    const auto exported = cli("--data " + q(db) + " export");
    EXPECT_NE(exported.out.find("Library closes early"), std::string::npos);
  }
}

TEST(Cli, PinnedServeNeedsFlag) {
  TempDir dir;
  const auto db = (dir / "c.db").string();
  const int port = free_port();
  Daemon daemon({"--data", db, "--clock", "2009-11-05T17:00:00Z", "serve", "--allow-pinned-serve", "--listen",
                 "127.0.0.1:" + std::to_string(port)});
  ASSERT_TRUE(wait_healthy(port));
  httplib::Client client("127.0.0.1", port);
  ASSERT_EQ(client.Post("/readers", R"({"reader_id":"R-CAFE-1","location":{"building_name":"Cafe"}})",
                        "application/json")
                ->status,
            201);
  const auto feed = client.Get("/feed?reader_id=R-CAFE-1&tag_id=x&now=2009-11-05T17:00:00Z");
  ASSERT_TRUE(feed);
  EXPECT_EQ(feed->status, 200);
  EXPECT_EQ(daemon.signal_and_wait(SIGINT), 0);
}

}  // namespace
