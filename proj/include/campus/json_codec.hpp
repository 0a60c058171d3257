#pragma once

#include <string>
#include <variant>

#include <json.hpp>

#include "campus/context_model.hpp"
#include "campus/error.hpp"
#include "campus/notification.hpp"
#include "campus/notification_store.hpp"
#include "campus/reader_gateway.hpp"

// JSON encodings shared by the data file, the HTTP API and scenario scripts.
// Decoders throw campus::Error with field() set to the offending key.
namespace campus::codec {

using nlohmann::json;

json encode(const StudentProfile& profile);
json encode(const ReaderRegistration& reader);
json encode(const Location& location);
json encode(const Targeting& targeting);
json encode(const Notification& notification);
json encode(const ReadState& state);
json encode(const TagDetectionEvent& event);
json encode(const DisplayPayload& payload);
json encode(const FeedEntry& entry);

StudentProfile decode_profile(const json& j);
ReaderRegistration decode_reader(const json& j);
Location decode_location(const json& j);
/// Exactly one of "students", "course", "broadcast"; anything else is
/// Errc::invalid_targeting.
Targeting decode_targeting(const json& j);
Notification decode_notification(const json& j);
NotificationDraft decode_draft(const json& j);
ReadState decode_read_state(const json& j);
/// Any structural problem is Errc::malformed_event.
TagDetectionEvent decode_event(const json& j);
DisplayPayload decode_payload(const json& j);

// Data-file records carry a "kind" discriminator.
using StoreRecord = std::variant<StudentProfile, ReaderRegistration, Notification, ReadState>;

json encode_record(const StoreRecord& record);
StoreRecord decode_record(const json& j);

/// {"code", "message", "field"} body returned for every failed request.
json encode_error(const Error& error);

/// Parses text as JSON, turning syntax errors into Errc::parse_error.
json parse(std::string_view text, Errc on_error = Errc::parse_error);

// Field helpers used by the decoders above and by scenario scripts.
const json& require(const json& j, const char* key, Errc code = Errc::parse_error);
std::string require_string(const json& j, const char* key, Errc code = Errc::parse_error);
std::string optional_string(const json& j, const char* key, Errc code = Errc::parse_error);

}  // namespace campus::codec
