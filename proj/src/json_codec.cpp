#include "campus/json_codec.hpp"

namespace campus::codec {

namespace {

[[noreturn]] void fail(Errc code, const std::string& field, const std::string& what) {
  throw Error(code, what, field);
}

const json& require_object(const json& j, const char* what, Errc code) {
  if (!j.is_object()) fail(code, what, std::string(what) + " must be a JSON object");
  return j;
}

TagId decode_tag(const json& j, const char* key, Errc code) {
  const std::string value = require_string(j, key, code);
  if (value.empty()) fail(code, key, std::string(key) + " must not be empty");
  return TagId{value};
}

Instant decode_instant(const json& j, const char* key, Errc code) {
  const std::string text = require_string(j, key, code);
  try {
    return parse_rfc3339(text);
  } catch (const Error& e) {
    fail(code, key, e.what());
  }
}

}  // namespace

json parse(std::string_view text, Errc on_error) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(on_error, "body", std::string("invalid JSON: ") + e.what());
  }
}

const json& require(const json& j, const char* key, Errc code) {
  if (!j.is_object()) fail(code, key, "expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) fail(code, key, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key, Errc code) {
  const json& v = require(j, key, code);
  if (!v.is_string()) fail(code, key, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& j, const char* key, Errc code) {
  if (!j.is_object()) fail(code, key, "expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) fail(code, key, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

json encode(const StudentProfile& profile) {
  json prefs = json::array();
  for (auto p : profile.preferences) prefs.push_back(std::string(to_string(p)));
  return {{"tag_id", profile.tag_id.str()},
          {"course_ids", profile.course_ids},
          {"preferences", std::move(prefs)},
          {"display_name", profile.display_name}};
}

StudentProfile decode_profile(const json& j) {
  require_object(j, "profile", Errc::parse_error);
  StudentProfile profile;
  profile.tag_id = decode_tag(j, "tag_id", Errc::parse_error);
  if (auto it = j.find("course_ids"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) fail(Errc::parse_error, "course_ids", "course_ids must be an array");
    for (const auto& c : *it) {
      if (!c.is_string() || normalize_token(c.get<std::string>()).empty())
        fail(Errc::parse_error, "course_ids", "course ids must be non-empty strings");
      profile.course_ids.insert(c.get<std::string>());
    }
  }
  if (auto it = j.find("preferences"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) fail(Errc::parse_error, "preferences", "preferences must be an array");
    for (const auto& p : *it) {
      if (!p.is_string()) fail(Errc::parse_error, "preferences", "preferences must be strings");
      profile.preferences.insert(parse_category(p.get<std::string>()));
    }
  }
  profile.display_name = optional_string(j, "display_name");
  return profile;
}

json encode(const Location& location) {
  return {{"building_name", location.building_name}, {"venue_name", location.venue_name}};
}

Location decode_location(const json& j) {
  require_object(j, "location", Errc::parse_error);
  Location location{require_string(j, "building_name"), optional_string(j, "venue_name")};
  if (normalize_token(location.building_name).empty())
    fail(Errc::parse_error, "building_name", "building_name must not be empty");
  return location;
}

json encode(const ReaderRegistration& reader) {
  return {{"reader_id", reader.reader_id}, {"location", encode(reader.location)}};
}

ReaderRegistration decode_reader(const json& j) {
  require_object(j, "reader", Errc::parse_error);
  ReaderRegistration reader{require_string(j, "reader_id"), decode_location(require(j, "location"))};
  if (reader.reader_id.empty()) fail(Errc::parse_error, "reader_id", "reader_id must not be empty");
  return reader;
}

json encode(const Targeting& targeting) {
  return std::visit(
      [](const auto& t) -> json {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, StudentTargets>) {
          json tags = json::array();
          for (const auto& tag : t.students) tags.push_back(tag.str());
          return {{"students", std::move(tags)}};
        } else if constexpr (std::is_same_v<T, CourseTarget>) {
          return {{"course", t.course}};
        } else {
          return {{"broadcast", std::string(to_string(t.category))}};
        }
      },
      targeting);
}

Targeting decode_targeting(const json& j) {
  constexpr Errc code = Errc::invalid_targeting;
  if (!j.is_object()) fail(code, "targeting", "targeting must be an object");
  const int present = static_cast<int>(j.contains("students")) + static_cast<int>(j.contains("course")) +
                      static_cast<int>(j.contains("broadcast"));
  if (present != 1 || j.size() != 1)
    fail(code, "targeting", "targeting must name exactly one of students, course, broadcast");

  if (j.contains("students")) {
    const json& list = j.at("students");
    if (!list.is_array()) fail(code, "targeting", "students must be an array of tag ids");
    StudentTargets targets;
    for (const auto& tag : list) {
      if (!tag.is_string() || tag.get<std::string>().empty())
        fail(code, "targeting", "student tag ids must be non-empty strings");
      targets.students.insert(TagId{tag.get<std::string>()});
    }
    return targets;
  }
  if (j.contains("course")) {
    const json& course = j.at("course");
    if (!course.is_string()) fail(code, "targeting", "course must be a string");
    return CourseTarget{course.get<std::string>()};
  }
  const json& category = j.at("broadcast");
  if (!category.is_string()) fail(code, "targeting", "broadcast must be a category name");
  try {
    return CategoryBroadcast{parse_category(category.get<std::string>())};
  } catch (const Error& e) {
    fail(code, "targeting", e.what());
  }
}

json encode(const Notification& n) {
  return {{"id", n.id},
          {"title", n.title},
          {"body", n.body},
          {"sender_name", n.sender_name},
          {"created_at", format_rfc3339(n.created_at)},
          {"expiry", format_expiry(n.expiry)},
          {"targeting", encode(n.targeting)},
          {"location_scope", n.location_scope ? json(*n.location_scope) : json(nullptr)},
          {"details", n.details}};
}

NotificationDraft decode_draft(const json& j) {
  require_object(j, "notification", Errc::parse_error);
  NotificationDraft draft;
  draft.title = require_string(j, "title");
  draft.body = optional_string(j, "body");
  draft.expiry = parse_expiry(require_string(j, "expiry"));
  draft.targeting = decode_targeting(require(j, "targeting", Errc::invalid_targeting));
  if (auto scope = optional_string(j, "location_scope"); !normalize_token(scope).empty())
    draft.location_scope = scope;
  draft.details = optional_string(j, "details");
  return draft;
}

Notification decode_notification(const json& j) {
  const NotificationDraft draft = decode_draft(j);
  Notification n;
  const json& id = require(j, "id");
  if (!id.is_number_unsigned() || id.get<NotificationId>() == 0)
    fail(Errc::parse_error, "id", "id must be a positive integer");
  n.id = id.get<NotificationId>();
  n.title = draft.title;
  n.body = draft.body;
  n.sender_name = optional_string(j, "sender_name");
  n.created_at = decode_instant(j, "created_at", Errc::parse_error);
  n.expiry = draft.expiry;
  n.targeting = draft.targeting;
  n.location_scope = draft.location_scope;
  n.details = draft.details;
  return n;
}

json encode(const ReadState& state) {
  return {{"notification_id", state.notification_id},
          {"tag_id", state.tag_id.str()},
          {"state", std::string(to_string(state.state))}};
}

ReadState decode_read_state(const json& j) {
  require_object(j, "read_state", Errc::parse_error);
  ReadState state;
  const json& id = require(j, "notification_id");
  if (!id.is_number_unsigned()) fail(Errc::parse_error, "notification_id", "notification_id must be an integer");
  state.notification_id = id.get<NotificationId>();
  state.tag_id = decode_tag(j, "tag_id", Errc::parse_error);
  state.state = parse_read_status(require_string(j, "state"));
  return state;
}

json encode(const TagDetectionEvent& event) {
  return {{"tag_id", event.tag_id.str()},
          {"reader_id", event.reader_id},
          {"timestamp", format_rfc3339(event.timestamp)},
          {"nonce", event.nonce}};
}

TagDetectionEvent decode_event(const json& j) {
  constexpr Errc code = Errc::malformed_event;
  require_object(j, "event", code);
  TagDetectionEvent event;
  event.tag_id = decode_tag(j, "tag_id", code);
  event.reader_id = require_string(j, "reader_id", code);
  if (event.reader_id.empty()) fail(code, "reader_id", "reader_id must not be empty");
  event.timestamp = decode_instant(j, "timestamp", code);
  event.nonce = require_string(j, "nonce", code);
  if (event.nonce.empty()) fail(code, "nonce", "nonce must not be empty");
  return event;
}

json encode(const FeedEntry& entry) {
  json j = encode(entry.notification);
  j["read"] = entry.read;
  j["matched_via"] = std::string(to_string(entry.matched_via));
  return j;
}

json encode(const DisplayPayload& payload) {
  json entries = json::array();
  for (const auto& e : payload.entries)
    entries.push_back({{"notification_id", e.notification_id},
                       {"title", e.title},
                       {"body", e.body},
                       {"sender_name", e.sender_name},
                       {"created_at", format_rfc3339(e.created_at)},
                       {"read", e.read},
                       {"matched_via", std::string(to_string(e.matched_via))}});
  return {{"reader_id", payload.reader_id},
          {"display_name", payload.display_name},
          {"entries", std::move(entries)}};
}

DisplayPayload decode_payload(const json& j) {
  DisplayPayload payload;
  payload.reader_id = require_string(j, "reader_id");
  payload.display_name = optional_string(j, "display_name");
  for (const auto& e : require(j, "entries")) {
    DisplayEntry entry;
    entry.notification_id = require(e, "notification_id").get<NotificationId>();
    entry.title = require_string(e, "title");
    entry.body = optional_string(e, "body");
    entry.sender_name = optional_string(e, "sender_name");
    entry.created_at = decode_instant(e, "created_at", Errc::parse_error);
    entry.read = require(e, "read").get<bool>();
    const std::string via = require_string(e, "matched_via");
    if (via == "direct_student")
      entry.matched_via = MatchGround::direct_student;
    else if (via == "course_batch")
      entry.matched_via = MatchGround::course_batch;
    else if (via == "preference_broadcast")
      entry.matched_via = MatchGround::preference_broadcast;
    else
      fail(Errc::parse_error, "matched_via", "unknown matched_via '" + via + "'");
    payload.entries.push_back(std::move(entry));
  }
  return payload;
}

json encode_error(const Error& error) {
  return {{"code", std::string(api_error_code(error.code()))},
          {"message", error.what()},
          {"field", error.field().empty() ? json(nullptr) : json(error.field())}};
}

json encode_record(const StoreRecord& record) {
  return std::visit(
      [](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        json j = encode(r);
        json out = json::object();
        if constexpr (std::is_same_v<T, StudentProfile>)
          out["kind"] = "profile";
        else if constexpr (std::is_same_v<T, ReaderRegistration>)
          out["kind"] = "reader";
        else if constexpr (std::is_same_v<T, Notification>)
          out["kind"] = "notification";
        else
          out["kind"] = "read_state";
        out.update(j);
        return out;
      },
      record);
}

StoreRecord decode_record(const json& j) {
  const std::string kind = require_string(j, "kind");
  if (kind == "profile") return decode_profile(j);
  if (kind == "reader") return decode_reader(j);
  if (kind == "notification") return decode_notification(j);
  if (kind == "read_state") return decode_read_state(j);
  fail(Errc::parse_error, "kind", "unknown record kind '" + kind + "'");
}

}  // namespace campus::codec
