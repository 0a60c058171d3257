#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "campus/clock.hpp"

namespace campus {

enum class StepAction {
  seed_profile,
  seed_reader,
  post_notification,
  detect,
  expect_feed_contains,
  expect_feed_excludes,
};

std::string_view to_string(StepAction action);

struct ScenarioStep {
  Instant at;
  StepAction action;
  nlohmann::json payload;
};

struct ScenarioScript {
  std::string name;
  std::vector<ScenarioStep> steps;
};

/// Decodes and validates a script. Every problem, including references to
/// tags, readers or notification refs not defined by an earlier step, is
/// reported as Errc::script_error before anything runs.
ScenarioScript parse_scenario(std::string_view json_text);
void validate_scenario(const ScenarioScript& script);

struct StepOutcome {
  std::size_t step = 0;  // 1-based position in the script
  Instant at;
  StepAction action;
  std::string description;
  bool passed = false;
  std::string detail;
};

struct ScenarioReport {
  std::string name;
  std::vector<StepOutcome> outcomes;  // expectations, plus any step that failed

  bool passed() const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Runs the script against a fresh in-memory store with a pinned clock that
/// is moved to each step's `at`. Never reads the wall clock.
ScenarioReport run_scenario(const ScenarioScript& script);

/// Scripts compiled into the binary: "jen", "farris", "worked_example".
std::optional<std::string> bundled_scenario(std::string_view name);
std::vector<std::string> bundled_scenario_names();
/// Bundled demo data in the store export format.
std::string bundled_campus_fixture();

}  // namespace campus
