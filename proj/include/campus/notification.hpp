#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include "campus/context_model.hpp"

namespace campus {

using NotificationId = std::uint64_t;

struct StudentTargets {
  std::set<TagId> students;
  friend bool operator==(const StudentTargets&, const StudentTargets&) = default;
};

struct CourseTarget {
  std::string course;
  friend bool operator==(const CourseTarget&, const CourseTarget&) = default;
};

struct CategoryBroadcast {
  PreferenceCategory category = PreferenceCategory::misc;
  friend bool operator==(const CategoryBroadcast&, const CategoryBroadcast&) = default;
};

/// Exactly one recipient rule per notification.
using Targeting = std::variant<StudentTargets, CourseTarget, CategoryBroadcast>;

/// What a staff member submits; the server fills in id, created_at and sender.
struct NotificationDraft {
  std::string title;
  std::string body;
  ExpirySpec expiry;
  Targeting targeting;
  std::optional<std::string> location_scope;
  std::string details;
};

struct Notification {
  NotificationId id = 0;
  std::string title;
  std::string body;
  std::string sender_name;
  Instant created_at;
  ExpirySpec expiry;
  Targeting targeting;
  std::optional<std::string> location_scope;
  std::string details;

  friend bool operator==(const Notification&, const Notification&) = default;
};

}  // namespace campus
