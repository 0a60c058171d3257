#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "campus/context_model.hpp"
#include "campus/notification.hpp"

namespace campus {

enum class Attribute { hour, meridiem, date, building, venue, tag_id, course_id, preference_category };

std::string_view to_string(Attribute attribute);

struct Condition {
  Attribute attribute;
  std::string expected;

  friend bool operator==(const Condition&, const Condition&) = default;
};

// IF <condition> AND <condition> ... THEN display(notification_id).
//
// Conditions on the same attribute are alternatives; distinct attributes are
// conjoined. Only tag_id and course_id may repeat. Expected values are stored
// normalized (tag ids are kept verbatim, hours canonicalized to "1".."12").
class Rule {
 public:
  Rule(std::vector<Condition> conditions, NotificationId notification_id);

  const std::vector<Condition>& conditions() const noexcept { return conditions_; }
  NotificationId notification_id() const noexcept { return notification_id_; }
  bool constrains(Attribute attribute) const;

  friend bool operator==(const Rule&, const Rule&) = default;

 private:
  std::vector<Condition> conditions_;
  NotificationId notification_id_;
};

enum class MatchGround { direct_student, course_batch, preference_broadcast };

std::string_view to_string(MatchGround ground);

struct MatchResult {
  NotificationId notification_id;
  MatchGround matched_via;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// Throws Errc::invalid_targeting when the notification addresses nobody.
Rule compile_rule(const Notification& notification);

bool matches(const Rule& rule, const Context& ctx);

/// Label for why a rule fires; direct > course > preference.
MatchGround match_ground(const Rule& rule);

/// Expiry is exclusive: active iff now < expiry.
bool is_active(const Notification& notification, Instant now);

/// Active, matching, not hidden; newest first, ties broken by ascending id.
std::vector<MatchResult> evaluate(const Context& ctx, std::span<const Notification> notifications,
                                  const std::set<NotificationId>& hidden = {});

}  // namespace campus
