#include "campus/scenario.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <sstream>

#include "campus/error.hpp"
#include "campus/json_codec.hpp"
#include "campus/notification_store.hpp"
#include "campus/reader_gateway.hpp"

namespace campus {

namespace {

using nlohmann::json;

constexpr std::array<std::pair<StepAction, std::string_view>, 6> kActions{{
    {StepAction::seed_profile, "seed_profile"},
    {StepAction::seed_reader, "seed_reader"},
    {StepAction::post_notification, "post_notification"},
    {StepAction::detect, "detect"},
    {StepAction::expect_feed_contains, "expect_feed_contains"},
    {StepAction::expect_feed_excludes, "expect_feed_excludes"},
}};

[[noreturn]] void script_error(std::size_t step, const std::string& what) {
  throw Error(Errc::script_error, "step " + std::to_string(step) + ": " + what, "steps");
}

bool is_expectation(StepAction action) {
  return action == StepAction::expect_feed_contains || action == StepAction::expect_feed_excludes;
}

}  // namespace

std::string_view to_string(StepAction action) {
  for (const auto& [a, name] : kActions)
    if (a == action) return name;
  return "unknown";
}

ScenarioScript parse_scenario(std::string_view json_text) {
  const json doc = codec::parse(json_text, Errc::script_error);
  ScenarioScript script;
  try {
    script.name = codec::require_string(doc, "name", Errc::script_error);
    const json& steps = codec::require(doc, "steps", Errc::script_error);
    if (!steps.is_array()) throw Error(Errc::script_error, "steps must be an array", "steps");
    std::size_t index = 0;
    for (const auto& s : steps) {
      ++index;
      ScenarioStep step;
      try {
        step.at = parse_rfc3339(codec::require_string(s, "at", Errc::script_error));
      } catch (const Error& e) {
        script_error(index, e.what());
      }
      const std::string action = codec::require_string(s, "action", Errc::script_error);
      const auto it = std::find_if(kActions.begin(), kActions.end(),
                                   [&](const auto& entry) { return entry.second == action; });
      if (it == kActions.end()) script_error(index, "unknown action '" + action + "'");
      step.action = it->first;
      step.payload = s.contains("payload") ? s.at("payload") : json::object();
      script.steps.push_back(std::move(step));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::script_error) throw;
    throw Error(Errc::script_error, e.what(), e.field());
  }
  validate_scenario(script);
  return script;
}

void validate_scenario(const ScenarioScript& script) {
  std::set<std::string> tags;
  std::set<std::string> readers;
  std::set<std::string> refs;

  auto known = [](const std::set<std::string>& pool, const std::string& key) { return pool.contains(key); };

  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& step = script.steps[i];
    const std::size_t n = i + 1;
    if (i > 0 && step.at < script.steps[i - 1].at) script_error(n, "steps are not sorted by 'at'");
    try {
      switch (step.action) {
        case StepAction::seed_profile: {
          const auto profile = codec::decode_profile(step.payload);
          if (!tags.insert(profile.tag_id.str()).second)
            script_error(n, "tag '" + profile.tag_id.str() + "' seeded twice");
          break;
        }
        case StepAction::seed_reader: {
          const auto reader = codec::decode_reader(step.payload);
          if (!readers.insert(reader.reader_id).second)
            script_error(n, "reader '" + reader.reader_id + "' seeded twice");
          break;
        }
        case StepAction::post_notification: {
          codec::decode_draft(step.payload);
          codec::require_string(step.payload, "sender");
          const std::string ref = codec::require_string(step.payload, "ref");
          if (!refs.insert(ref).second) script_error(n, "notification ref '" + ref + "' defined twice");
          break;
        }
        case StepAction::detect:
        case StepAction::expect_feed_contains:
        case StepAction::expect_feed_excludes: {
          const std::string tag = codec::require_string(step.payload, "tag_id");
          const std::string reader = codec::require_string(step.payload, "reader_id");
          if (!known(tags, tag)) script_error(n, "tag '" + tag + "' is not seeded by an earlier step");
          if (!known(readers, reader)) script_error(n, "reader '" + reader + "' is not seeded by an earlier step");
          if (is_expectation(step.action)) {
            const std::string ref = codec::require_string(step.payload, "notification");
            if (!known(refs, ref)) script_error(n, "notification ref '" + ref + "' is not posted by an earlier step");
          }
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() == Errc::script_error) throw;
      script_error(n, e.what());
    }
  }
}

bool ScenarioReport::passed() const {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const StepOutcome& o) { return o.passed; });
}

json ScenarioReport::to_json() const {
  json results = json::array();
  std::size_t failures = 0;
  for (const auto& o : outcomes) {
    failures += o.passed ? 0 : 1;
    results.push_back({{"step", o.step},
                       {"at", format_rfc3339(o.at)},
                       {"action", std::string(to_string(o.action))},
                       {"description", o.description},
                       {"passed", o.passed},
                       {"detail", o.detail}});
  }
  return {{"name", name},
          {"passed", passed()},
          {"total", outcomes.size()},
          {"failures", failures},
          {"results", std::move(results)}};
}

std::string ScenarioReport::to_text() const {
  std::ostringstream out;
  out << "scenario " << name << '\n';
  for (const auto& o : outcomes) {
    out << (o.passed ? "  PASS " : "  FAIL ") << "step " << o.step << " @ " << format_rfc3339(o.at) << ' '
        << to_string(o.action) << ": " << o.description;
    if (!o.detail.empty()) out << " (" << o.detail << ')';
    out << '\n';
  }
  out << (passed() ? "all expectations passed" : "scenario FAILED") << '\n';
  return out.str();
}

ScenarioReport run_scenario(const ScenarioScript& script) {
  validate_scenario(script);

  NotificationStore store;
  PinnedClock clock(script.steps.empty() ? Instant{} : script.steps.front().at);
  ReaderGateway gateway(store, clock);
  std::map<std::string, NotificationId> refs;

  ScenarioReport report{script.name, {}};
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& step = script.steps[i];
    clock.set(step.at);
    StepOutcome outcome{i + 1, step.at, step.action, codec::optional_string(step.payload, "description"), true, {}};

    try {
      switch (step.action) {
        case StepAction::seed_profile:
          store.register_profile(codec::decode_profile(step.payload));
          break;
        case StepAction::seed_reader:
          store.register_reader(codec::decode_reader(step.payload));
          break;
        case StepAction::post_notification: {
          const auto created = store.create_notification(codec::decode_draft(step.payload),
                                                         codec::require_string(step.payload, "sender"), clock.now());
          refs[codec::require_string(step.payload, "ref")] = created.id;
          break;
        }
        case StepAction::detect: {
          std::string nonce = codec::optional_string(step.payload, "nonce");
          if (nonce.empty()) nonce = script.name + "-detect-" + std::to_string(i + 1);
          gateway.ingest_event({TagId{codec::require_string(step.payload, "tag_id")},
                                codec::require_string(step.payload, "reader_id"), step.at, nonce});
          break;
        }
        case StepAction::expect_feed_contains:
        case StepAction::expect_feed_excludes: {
          const std::string ref = codec::require_string(step.payload, "notification");
          const auto posted = refs.find(ref);
          if (posted == refs.end())
            throw Error(Errc::script_error, "notification '" + ref + "' was never created", "notification");
          const NotificationId id = posted->second;
          const auto payload =
              gateway.ingest_event({TagId{codec::require_string(step.payload, "tag_id")},
                                    codec::require_string(step.payload, "reader_id"), step.at,
                                    script.name + "-expect-" + std::to_string(i + 1)});
          const auto entry = std::find_if(payload.entries.begin(), payload.entries.end(),
                                          [id](const DisplayEntry& e) { return e.notification_id == id; });
          const bool present = entry != payload.entries.end();
          if (outcome.description.empty())
            outcome.description = "'" + ref + "' " +
                                  (step.action == StepAction::expect_feed_contains ? "shown" : "hidden");
          if (step.action == StepAction::expect_feed_contains) {
            outcome.passed = present;
            if (!present) outcome.detail = "'" + ref + "' missing from feed";
            const std::string body = codec::optional_string(step.payload, "body");
            if (present && !body.empty() && entry->body != body) {
              outcome.passed = false;
              outcome.detail = "body was '" + entry->body + "'";
            }
          } else {
            outcome.passed = !present;
            if (present) outcome.detail = "'" + ref + "' unexpectedly shown";
          }
          outcome.detail += (outcome.detail.empty() ? "" : "; ") + std::to_string(payload.entries.size()) +
                            " entr" + (payload.entries.size() == 1 ? "y" : "ies") + " on screen";
          report.outcomes.push_back(std::move(outcome));
          continue;
        }
      }
    } catch (const Error& e) {
      outcome.passed = false;
      outcome.detail = std::string(to_string(e.code())) + ": " + e.what();
      report.outcomes.push_back(std::move(outcome));
    }
  }
  return report;
}

}  // namespace campus
