// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>
#include <random>
#include <set>

#include "campus/json_codec.hpp"
#include "campus/rule_engine.hpp"
#include "campus/scenario.hpp"
#include "support/live_server.hpp"
#include "support/oracle.hpp"

namespace {

using namespace campus;
using namespace std::chrono;
using nlohmann::json;
using Stopwatch = steady_clock;

constexpr auto kWorkedExampleBudget = milliseconds{1000};
constexpr int kOracleInstances = 1000;
constexpr auto kOracleBudget = milliseconds{10000};
constexpr double kBranchCoverageFloor = 0.95;
constexpr std::size_t kThroughputEvents = 10000;
constexpr std::size_t kSpotChecks = 100;
constexpr const char* kLeagueBody = "inter-varsity football league is on now";

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS " : "FAIL ") << name << " :: " << detail << std::endl;
}

double ms_since(Stopwatch::time_point start) {
  return duration<double, std::milli>(Stopwatch::now() - start).count();
}

std::string fmt_ms(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f ms", ms);
  return buf;
}

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& command) {
  Run r;
  FILE* pipe = popen((command + " 2>/dev/null").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

Instant on_nov5(int hh, int mm = 0, int ss = 0) {
  return sys_days{year{2009} / 11 / 5} + hours{hh} + minutes{mm} + seconds{ss};
}

// ---------------------------------------------------------------------------

void worked_example() {
  const auto start = Stopwatch::now();
  std::string detail;
  bool pass = false;
  try {
    NotificationStore store;
    PinnedClock clock(on_nov5(16));
    testing::LiveServer server(store, clock);
    auto client = server.client();
    const auto post = [&](const char* path, const json& body, httplib::Headers headers = {}) {
      auto r = client.Post(path, headers, body.dump(), "application/json");
      if (!r) throw std::runtime_error(std::string("no response from ") + path);
      return std::pair{r->status, json::parse(r->body)};
    };
    post("/profiles", {{"tag_id", "1038"}, {"preferences", {"Sports"}}});
    post("/readers", {{"reader_id", "R-SPORT-1"}, {"location", {{"building_name", "Sports Complex"}}}});
    post("/readers", {{"reader_id", "R-CAFE-1"}, {"location", {{"building_name", "Cafe"}}}});
    const auto [created, _] = post("/notifications",
                                   {{"title", "Inter-varsity football league"},
                                    {"body", kLeagueBody},
                                    {"expiry", "2009-11-05 PM 7:00"},
                                    {"targeting", {{"broadcast", "Sports"}}},
                                    {"location_scope", "sports_complex"}},
                                   {{"X-Sender", "Sports Office"}});
    clock.set(on_nov5(17));
    const auto [s1, sports] = post("/events", {{"tag_id", "1038"},
                                               {"reader_id", "R-SPORT-1"},
                                               {"timestamp", "2009-11-05T17:00:00Z"},
                                               {"nonce", "we-1"}});
    const auto [s2, cafe] = post("/events", {{"tag_id", "1038"},
                                             {"reader_id", "R-CAFE-1"},
                                             {"timestamp", "2009-11-05T17:00:00Z"},
                                             {"nonce", "we-2"}});
    const double elapsed = ms_since(start);
    const auto& entries = sports.at("entries");
    const bool sole = s1 == 200 && entries.size() == 1 && entries[0].at("body") == kLeagueBody;
    const bool empty_cafe = s2 == 200 && cafe.at("entries").empty();
    pass = created == 201 && sole && empty_cafe && elapsed < duration<double, std::milli>(kWorkedExampleBudget).count();
    detail = "sports entries=" + std::to_string(entries.size()) +
             (sole ? " body exact" : " body mismatch") + ", cafe entries=" + std::to_string(cafe.at("entries").size()) +
             ", " + fmt_ms(elapsed) + " (< 1000 ms)";
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report("worked example over HTTP", pass, detail);
}

// ---------------------------------------------------------------------------

struct ScenarioRun {
  ScenarioScript script;
  json report;
  int exit_status = -1;
};

ScenarioRun play(const std::string& name) {
  ScenarioRun r{parse_scenario(*bundled_scenario(name)), {}, -1};
  const Run cli = run(std::string(CAMPUS_CLI) + " scenario " + name + " --json");
  r.exit_status = cli.status;
  r.report = json::parse(cli.out);
  return r;
}

// Finds an expectation step with the given shape and says whether it passed.
std::optional<bool> expectation(const ScenarioRun& r, StepAction action, const std::string& tag,
                                const std::string& reader, std::optional<Instant> at = std::nullopt) {
  for (const auto& result : r.report.at("results")) {
    const auto& step = r.script.steps.at(result.at("step").get<std::size_t>() - 1);
    if (step.action != action || step.payload.value("tag_id", "") != tag ||
        step.payload.value("reader_id", "") != reader)
      continue;
    if (at && step.at != *at) continue;
    return result.at("passed").get<bool>();
  }
  return std::nullopt;
}

std::vector<std::string> seeded(const ScenarioScript& s, StepAction action, const char* key) {
  std::vector<std::string> out;
  for (const auto& step : s.steps)
    if (step.action == action) out.push_back(step.payload.at(key).get<std::string>());
  return out;
}

void jen() {
  std::string detail;
  bool pass = false;
  try {
    const auto r = play("jen");
    const auto shown = expectation(r, StepAction::expect_feed_contains, "1042", "R-CAFE-1", on_nov5(17));
    const auto at_expiry = expectation(r, StepAction::expect_feed_excludes, "1042", "R-CAFE-1", on_nov5(20));
    const auto later = expectation(r, StepAction::expect_feed_excludes, "1042", "R-CAFE-1", on_nov5(21));
    auto word = [](std::optional<bool> v) { return !v ? std::string("missing") : *v ? "ok" : "failed"; };
    pass = r.exit_status == 0 && r.report.at("passed") == true && shown.value_or(false) &&
           at_expiry.value_or(false) && later.value_or(false);
    detail = "exit " + std::to_string(r.exit_status) + ", " + std::to_string(r.report.at("total").get<int>()) +
             " expectations; 17:00 shown " + word(shown) + ", 20:00:00 hidden " + word(at_expiry) +
             ", 21:00 hidden " + word(later);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report("jen scenario", pass, detail);
}

void farris() {
  std::string detail;
  bool pass = false;
  try {
    const auto r = play("farris");
    std::string sports_reader;
    for (const auto& step : r.script.steps)
      if (step.action == StepAction::seed_reader &&
          normalize_token(step.payload.at("location").at("building_name").get<std::string>()) == "sports_complex")
        sports_reader = step.payload.at("reader_id");
    bool ok = r.exit_status == 0 && r.report.at("passed") == true && !sports_reader.empty();
    ok = ok && expectation(r, StepAction::expect_feed_contains, "2087", sports_reader).value_or(false);
    int elsewhere = 0;
    for (const auto& reader : seeded(r.script, StepAction::seed_reader, "reader_id")) {
      if (reader == sports_reader) continue;
      ok = ok && expectation(r, StepAction::expect_feed_excludes, "2087", reader).value_or(false);
      ++elsewhere;
    }
    int non_sports = 0;
    for (const auto& step : r.script.steps) {
      if (step.action != StepAction::seed_profile) continue;
      const auto profile = codec::decode_profile(step.payload);
      if (profile.prefers(PreferenceCategory::sports)) continue;
      ok = ok && expectation(r, StepAction::expect_feed_excludes, profile.tag_id.str(), sports_reader).value_or(false);
      ++non_sports;
    }
    pass = ok && elsewhere > 0 && non_sports > 0;
    detail = "exit " + std::to_string(r.exit_status) + "; shown at " + sports_reader + ", hidden at " +
             std::to_string(elsewhere) + " other readers, hidden for " + std::to_string(non_sports) +
             " non-Sports profile(s)";
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report("farris scenario", pass, detail);
}

// ---------------------------------------------------------------------------

void oracle_equivalence() {
  oracle::Generator gen(0x5eed2009);
  const auto start = Stopwatch::now();
  int agreed = 0;
  std::size_t contexts = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const auto inst = gen.instance(10, 50, 20);
    bool same = true;
    for (const auto& ctx : inst.contexts) {
      ++contexts;
      same = same && oracle::as_expected(evaluate(ctx, inst.notifications)) == oracle::evaluate(ctx, inst.notifications);
    }
    agreed += same ? 1 : 0;
  }
  const double elapsed = ms_since(start);
  const bool pass = agreed == kOracleInstances && elapsed < duration<double, std::milli>(kOracleBudget).count();
  report("oracle equivalence", pass,
         std::to_string(agreed) + "/" + std::to_string(kOracleInstances) + " instances identical (" +
             std::to_string(contexts) + " contexts), " + fmt_ms(elapsed) + " (< 10000 ms)");
}

// ---------------------------------------------------------------------------

struct BranchCount {
  int taken = 0;
  int total = 0;
};

// Branches of the matching functions in rule_engine.cpp, ignoring exception edges.
std::optional<BranchCount> matching_branches(std::string& error) {
  const Run gcov = run(std::string(CAMPUS_GCOV) + " -b -j -t '" + CAMPUS_RULE_ENGINE_GCDA + "'");
  if (gcov.status != 0) {
    error = "gcov exited " + std::to_string(gcov.status);
    return std::nullopt;
  }
  const json doc = json::parse(gcov.out, nullptr, false);
  if (doc.is_discarded()) {
    error = "unreadable gcov output";
    return std::nullopt;
  }
  static const std::vector<std::string> kMatching{"canonical_expected", "holds(", "Rule::Rule", "compile_rule",
                                                  "matches(", "match_ground", "is_active", "evaluate("};
  for (const auto& file : doc.at("files")) {
    if (!file.at("file").get<std::string>().ends_with("rule_engine.cpp")) continue;
    std::vector<std::pair<int, int>> ranges;
    for (const auto& fn : file.at("functions")) {
      const std::string name = fn.at("demangled_name");
      for (const auto& m : kMatching)
        if (name.find(m) != std::string::npos && name.find("::{lambda") == std::string::npos)
          ranges.emplace_back(fn.at("start_line").get<int>(), fn.at("end_line").get<int>());
    }
    BranchCount count;
    for (const auto& line : file.at("lines")) {
      const int n = line.at("line_number");
      if (std::none_of(ranges.begin(), ranges.end(), [n](auto r) { return n >= r.first && n <= r.second; }))
        continue;
      for (const auto& b : line.at("branches")) {
        if (b.at("throw").get<bool>()) continue;
        ++count.total;
        count.taken += b.at("count").get<long>() > 0 ? 1 : 0;
      }
    }
    return count;
  }
  error = "rule_engine.cpp missing from gcov output";
  return std::nullopt;
}

void property_suite() {
  std::filesystem::remove(CAMPUS_RULE_ENGINE_GCDA);
  struct Suite {
    const char* label;
    std::string command;
  };
  const std::vector<Suite> suites{
      {"rule properties", std::string(CAMPUS_RULE_PROPERTIES_COV)},
      {"rule unit", std::string(CAMPUS_RULE_ENGINE_COV)},
      {"store", std::string(CAMPUS_STORE_TESTS) + " --gtest_filter='StoreProperties.*:StorePersistence.*:StoreSeed.*'"},
      {"ingestion", std::string(CAMPUS_GATEWAY_TESTS) + " --gtest_filter='GatewayIdempotence.*'"},
  };
  bool green = true;
  std::string detail;
  for (const auto& s : suites) {
    const Run r = run(s.command);
    green = green && r.status == 0;
    detail += std::string(s.label) + (r.status == 0 ? " ok, " : " FAILED, ");
  }
  std::string error;
  const auto branches = matching_branches(error);
  bool covered = false;
  if (branches && branches->total > 0) {
    const double ratio = static_cast<double>(branches->taken) / branches->total;
    covered = ratio >= kBranchCoverageFloor;
    char buf[96];
    std::snprintf(buf, sizeof buf, "branch coverage %d/%d = %.1f%% (>= 95%%)", branches->taken, branches->total,
                  100.0 * ratio);
    detail += buf;
  } else {
    detail += "branch coverage unavailable: " + error;
  }
  report("property suite and matching-logic coverage", green && covered, detail);
}

// ---------------------------------------------------------------------------

void throughput() {
  std::string detail;
  bool pass = false;
  try {
    oracle::Generator gen(0x10000);
    const auto inst = gen.instance(40, 200, 1);
    std::vector<ReaderRegistration> readers = inst.readers;
    std::map<std::string, ReaderRegistration> reader_by_id;
    for (const auto& r : readers) reader_by_id.emplace(r.reader_id, r);

    std::vector<codec::StoreRecord> records;
    for (const auto& p : inst.profiles) records.emplace_back(p);
    for (const auto& r : readers) records.emplace_back(r);
    for (const auto& n : inst.notifications) records.emplace_back(n);
    std::map<std::pair<std::string, NotificationId>, ReadStatus> states;
    if (!inst.notifications.empty())
      for (int i = 0; i < 150; ++i) {
        const auto& p = gen.pick(inst.profiles);
        const auto& n = gen.pick(inst.notifications);
        const auto status = gen.coin(0.4) ? ReadStatus::deleted : ReadStatus::read;
        auto& slot = states[{p.tag_id.str(), n.id}];
        if (slot == ReadStatus::deleted) continue;
        slot = status;
      }
    for (const auto& [key, status] : states) records.emplace_back(ReadState{key.second, TagId{key.first}, status});
    std::string jsonl;
    for (const auto& r : records) jsonl += codec::encode_record(r).dump() + "\n";

    NotificationStore store;
    store.import_records(jsonl);
    PinnedClock clock(gen.base());
    testing::LiveServer server(store, clock);

    std::vector<TagDetectionEvent> plan;
    std::vector<int> offsets;
    for (std::size_t i = 0; i < kThroughputEvents; ++i) offsets.push_back(gen.uniform(0, 20 * 3600));
    std::sort(offsets.begin(), offsets.end());
    for (std::size_t i = 0; i < kThroughputEvents; ++i) {
      const bool visitor = gen.coin(0.05);
      plan.push_back({visitor ? TagId{"VISITOR-" + std::to_string(i % 7)} : gen.pick(inst.profiles).tag_id,
                      gen.pick(readers).reader_id, gen.base() + seconds{offsets[i]}, "tp-" + std::to_string(i)});
    }

    const auto start = Stopwatch::now();
    const auto results = simulate_readers(plan, Pacing::as_fast_as_possible, http_transport("127.0.0.1", server.port()),
                                          {}, [&](const TagDetectionEvent& e) { clock.set(e.timestamp); });
    const double elapsed = ms_since(start);

    std::map<NotificationId, const Notification*> by_id;
    for (const auto& n : inst.notifications) by_id[n.id] = &n;
    std::map<std::string, const StudentProfile*> profile_by_tag;
    for (const auto& p : inst.profiles) profile_by_tag[p.tag_id.str()] = &p;

    std::size_t violations = 0;
    std::size_t shown = 0;
    std::string first_violation;
    auto violate = [&](std::size_t i, const std::string& what) {
      if (violations++ == 0) first_violation = "event " + std::to_string(i) + ": " + what;
    };
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& rec = results[i];
      if (!rec.payload) {
        violate(i, "error " + rec.error_code.value_or("?") + " " + rec.error_message);
        continue;
      }
      const auto& entries = rec.payload->entries;
      shown += entries.size();
      if (rec.payload->reader_id != rec.event.reader_id) violate(i, "reader id not echoed");
      const bool known = profile_by_tag.contains(rec.event.tag_id.str());
      if (!known && !entries.empty()) violate(i, "visitor saw entries");
      std::set<NotificationId> seen;
      for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        const auto it = by_id.find(e.notification_id);
        if (it == by_id.end()) {
          violate(i, "unknown notification in payload");
          continue;
        }
        if (!seen.insert(e.notification_id).second) violate(i, "duplicate entry");
        if (!(rec.event.timestamp < to_instant(it->second->expiry))) violate(i, "expired entry shown");
        const auto st = states.find({rec.event.tag_id.str(), e.notification_id});
        const ReadStatus status = st == states.end() ? ReadStatus::unread : st->second;
        if (status == ReadStatus::deleted) violate(i, "deleted entry shown");
        if (e.read != (status == ReadStatus::read)) violate(i, "read flag wrong");
        if (k > 0) {
          const auto& prev = entries[k - 1];
          if (prev.created_at < e.created_at ||
              (prev.created_at == e.created_at && prev.notification_id > e.notification_id))
            violate(i, "entries out of order");
        }
      }
    }
    if (results.size() != plan.size()) violate(0, "missing records");

    std::mt19937_64 pick(99);
    std::size_t agree = 0;
    for (std::size_t c = 0; c < kSpotChecks; ++c) {
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, results.size() - 1)(pick);
      const auto& rec = results[i];
      if (!rec.payload) continue;
      std::vector<oracle::Expected> got;
      for (const auto& e : rec.payload->entries) got.push_back({e.notification_id, e.matched_via});
      std::vector<oracle::Expected> want;
      if (const auto p = profile_by_tag.find(rec.event.tag_id.str()); p != profile_by_tag.end()) {
        std::set<NotificationId> hidden;
        for (const auto& [key, status] : states)
          if (key.first == rec.event.tag_id.str() && status == ReadStatus::deleted) hidden.insert(key.second);
        const Context ctx{rec.event.timestamp, *p->second, reader_by_id.at(rec.event.reader_id).location};
        want = oracle::evaluate(ctx, inst.notifications, hidden);
      }
      agree += got == want ? 1 : 0;
    }

    const auto accepted = server.api().gateway().accepted_events();
    pass = violations == 0 && agree == kSpotChecks && accepted == kThroughputEvents;
    char rate[48];
    std::snprintf(rate, sizeof rate, "%.0f events/s", 1000.0 * results.size() / std::max(elapsed, 1.0));
    detail = std::to_string(results.size()) + " events over HTTP in " + fmt_ms(elapsed) + " (" + rate + "), " +
             std::to_string(shown) + " entries, " + std::to_string(violations) + " invariant violations" +
             (first_violation.empty() ? "" : " [" + first_violation + "]") + ", spot-check " + std::to_string(agree) +
             "/" + std::to_string(kSpotChecks) + " match oracle";
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report("throughput smoke", pass, detail);
}

}  // namespace

int main() {
  worked_example();
  jen();
  farris();
  oracle_equivalence();
  property_suite();
  throughput();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
