#include "campus/rule_engine.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstddef>

#include "campus/error.hpp"

namespace campus {

namespace {

using namespace std::chrono;

constexpr std::size_t kAttributeCount = 8;

std::size_t slot(Attribute attribute) { return static_cast<std::size_t>(attribute); }

bool repeatable(Attribute attribute) {
  return attribute == Attribute::tag_id || attribute == Attribute::course_id;
}

std::string canonical_expected(const Condition& condition) {
  switch (condition.attribute) {
    case Attribute::tag_id: {
      std::string_view v = condition.expected;
      while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
      while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
      return std::string(v);
    }
    case Attribute::hour: {
      const std::string token = normalize_token(condition.expected);
      if (token.empty() || token.size() > 2 ||
          !std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw Error(Errc::invalid_rule, "hour condition must be 1..12, got '" + condition.expected + "'",
                    "hour");
      const int hour = std::stoi(token);
      if (hour < 1 || hour > 12)
        throw Error(Errc::invalid_rule, "hour condition must be 1..12, got '" + condition.expected + "'",
                    "hour");
      return std::to_string(hour);
    }
    case Attribute::preference_category:
      return normalize_token(to_string(parse_category(condition.expected)));
    default:
      return normalize_token(condition.expected);
  }
}

struct ContextView {
  const Context& ctx;

  std::string hour() const {
    const hh_mm_ss tod{ctx.timestamp - floor<days>(ctx.timestamp)};
    const int h = static_cast<int>(tod.hours().count()) % 12;
    return std::to_string(h == 0 ? 12 : h);
  }
  std::string meridiem() const {
    const hh_mm_ss tod{ctx.timestamp - floor<days>(ctx.timestamp)};
    return tod.hours().count() < 12 ? "am" : "pm";
  }
  std::string date() const { return format_date(year_month_day{floor<days>(ctx.timestamp)}); }
};

bool holds(const Condition& condition, const Context& ctx) {
  const ContextView view{ctx};
  switch (condition.attribute) {
    case Attribute::hour:
      return view.hour() == condition.expected;
    case Attribute::meridiem:
      return view.meridiem() == condition.expected;
    case Attribute::date:
      return view.date() == condition.expected;
    case Attribute::building:
      return normalize_token(ctx.location.building_name) == condition.expected;
    case Attribute::venue:
      return normalize_token(ctx.location.venue_name) == condition.expected;
    case Attribute::tag_id:
      return ctx.identity.tag_id.str() == condition.expected;
    case Attribute::course_id:
      return ctx.identity.enrolled_in(condition.expected);
    case Attribute::preference_category:
      return ctx.identity.prefers(parse_category(condition.expected));
  }
  return false;
}

}  // namespace

std::string_view to_string(Attribute attribute) {
  switch (attribute) {
    case Attribute::hour: return "hour";
    case Attribute::meridiem: return "meridiem";
    case Attribute::date: return "date";
    case Attribute::building: return "building";
    case Attribute::venue: return "venue";
    case Attribute::tag_id: return "tag_id";
    case Attribute::course_id: return "course_id";
    case Attribute::preference_category: return "preference_category";
  }
  return "unknown";
}

std::string_view to_string(MatchGround ground) {
  switch (ground) {
    case MatchGround::direct_student: return "direct_student";
    case MatchGround::course_batch: return "course_batch";
    case MatchGround::preference_broadcast: return "preference_broadcast";
  }
  return "unknown";
}

Rule::Rule(std::vector<Condition> conditions, NotificationId notification_id)
    : conditions_(std::move(conditions)), notification_id_(notification_id) {
  std::array<bool, kAttributeCount> seen{};
  for (auto& condition : conditions_) {
    condition.expected = canonical_expected(condition);
    if (condition.expected.empty())
      throw Error(Errc::invalid_rule,
                  "condition on " + std::string(to_string(condition.attribute)) + " has no expected value",
                  std::string(to_string(condition.attribute)));
    if (seen[slot(condition.attribute)] && !repeatable(condition.attribute))
      throw Error(Errc::invalid_rule,
                  "attribute " + std::string(to_string(condition.attribute)) + " may appear only once",
                  std::string(to_string(condition.attribute)));
    seen[slot(condition.attribute)] = true;
  }
}

bool Rule::constrains(Attribute attribute) const {
  return std::any_of(conditions_.begin(), conditions_.end(),
                     [attribute](const Condition& c) { return c.attribute == attribute; });
}

Rule compile_rule(const Notification& notification) {
  std::vector<Condition> conditions;
  auto no_targets = [&] {
    return Error(Errc::invalid_targeting,
                 "notification " + std::to_string(notification.id) + " has no recipients", "targeting");
  };

  if (const auto* students = std::get_if<StudentTargets>(&notification.targeting)) {
    if (students->students.empty()) throw no_targets();
    for (const auto& tag : students->students) conditions.push_back({Attribute::tag_id, tag.str()});
  } else if (const auto* course = std::get_if<CourseTarget>(&notification.targeting)) {
    if (normalize_token(course->course).empty()) throw no_targets();
    conditions.push_back({Attribute::course_id, course->course});
  } else {
    const auto& broadcast = std::get<CategoryBroadcast>(notification.targeting);
    conditions.push_back({Attribute::preference_category, std::string(to_string(broadcast.category))});
  }

  if (notification.location_scope && !normalize_token(*notification.location_scope).empty())
    conditions.push_back({Attribute::building, *notification.location_scope});

  return Rule{std::move(conditions), notification.id};
}

bool matches(const Rule& rule, const Context& ctx) {
  enum class Group : unsigned char { absent, unsatisfied, satisfied };
  std::array<Group, kAttributeCount> groups{};
  for (const auto& condition : rule.conditions()) {
    Group& group = groups[slot(condition.attribute)];
    if (group == Group::satisfied) continue;
    group = holds(condition, ctx) ? Group::satisfied : Group::unsatisfied;
  }
  return std::none_of(groups.begin(), groups.end(), [](Group g) { return g == Group::unsatisfied; });
}

MatchGround match_ground(const Rule& rule) {
  if (rule.constrains(Attribute::tag_id)) return MatchGround::direct_student;
  if (rule.constrains(Attribute::course_id)) return MatchGround::course_batch;
  return MatchGround::preference_broadcast;
}

bool is_active(const Notification& notification, Instant now) {
  return now < to_instant(notification.expiry);
}

std::vector<MatchResult> evaluate(const Context& ctx, std::span<const Notification> notifications,
                                  const std::set<NotificationId>& hidden) {
  struct Hit {
    Instant created_at;
    MatchResult result;
  };
  std::vector<Hit> hits;
  for (const auto& notification : notifications) {
    if (hidden.contains(notification.id) || !is_active(notification, ctx.timestamp)) continue;
    try {
      const Rule rule = compile_rule(notification);
      if (matches(rule, ctx)) hits.push_back({notification.created_at, {notification.id, match_ground(rule)}});
    } catch (const Error&) {
      // A notification that addresses nobody never fires.
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.result.notification_id < b.result.notification_id;
  });

  std::vector<MatchResult> out;
  out.reserve(hits.size());
  for (const auto& hit : hits) out.push_back(hit.result);
  return out;
}

}  // namespace campus
