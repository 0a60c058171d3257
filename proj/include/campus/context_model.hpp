#pragma once

#include <chrono>
#include <compare>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "campus/clock.hpp"

namespace campus {

/// Identifier burned into a student's matrix card.
class TagId {
 public:
  TagId() = default;
  explicit TagId(std::string value);

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  auto operator<=>(const TagId&) const = default;

 private:
  std::string value_;
};

enum class PreferenceCategory { book, class_, sports, events, misc };

/// Case-insensitive; surrounding whitespace is ignored. Throws Errc::parse_error.
PreferenceCategory parse_category(std::string_view text);
/// Canonical capitalized form ("Book", "Class", ...).
std::string_view to_string(PreferenceCategory category);

/// Lowercases, trims and collapses internal whitespace runs into a single
/// underscore, so "  Sports   Complex " and "sports_complex" compare equal.
std::string normalize_token(std::string_view text);

struct Location {
  std::string building_name;
  std::string venue_name;

  friend bool operator==(const Location& a, const Location& b);
};

struct StudentProfile {
  TagId tag_id;
  std::set<std::string> course_ids;
  std::set<PreferenceCategory> preferences;
  std::string display_name;

  bool enrolled_in(std::string_view course_id) const;
  bool prefers(PreferenceCategory category) const { return preferences.contains(category); }

  friend bool operator==(const StudentProfile&, const StudentProfile&) = default;
};

struct ReaderRegistration {
  std::string reader_id;
  Location location;

  friend bool operator==(const ReaderRegistration& a, const ReaderRegistration& b) {
    return a.reader_id == b.reader_id && a.location.building_name == b.location.building_name &&
           a.location.venue_name == b.location.venue_name;
  }
};

enum class Meridiem { am, pm };

struct ExpirySpec {
  std::chrono::year_month_day date;
  Meridiem meridiem = Meridiem::am;
  int hour = 12;  // 1..=12
  int minute = 0;

  friend bool operator==(const ExpirySpec&, const ExpirySpec&) = default;
};

/// Accepts "YYYY-MM-DD AM|PM H:MM" (hour may omit its leading zero).
/// Throws Errc::parse_error with field() naming the bad component.
ExpirySpec parse_expiry(std::string_view text);
/// Always zero-padded: "2009-11-05 PM 08:00".
std::string format_expiry(const ExpirySpec& spec);
/// 12 AM maps to 00:xx and 12 PM to 12:xx.
Instant to_instant(const ExpirySpec& spec);
/// Inverse of to_instant for minute-aligned instants.
ExpirySpec expiry_from_instant(Instant at);

std::chrono::year_month_day parse_date(std::string_view text);
std::string format_date(std::chrono::year_month_day date);

/// RFC 3339. Output is always UTC with a trailing 'Z'; input accepts 'Z' or
/// a numeric offset and an optional fractional part, which is truncated.
std::string format_rfc3339(Instant at);
Instant parse_rfc3339(std::string_view text);

struct TagDetectionEvent {
  TagId tag_id;
  std::string reader_id;
  Instant timestamp;
  std::string nonce;

  friend bool operator==(const TagDetectionEvent&, const TagDetectionEvent&) = default;
};

struct Context {
  Instant timestamp;
  StudentProfile identity;
  Location location;
};

using ProfileRegistry = std::map<TagId, StudentProfile>;
using ReaderRegistry = std::map<std::string, ReaderRegistration, std::less<>>;

/// Joins a detection event with the stored profile and the reader's location.
/// Throws Errc::unknown_reader or Errc::unknown_tag.
Context assemble_context(const TagDetectionEvent& event, const ProfileRegistry& profiles,
                         const ReaderRegistry& readers);

}  // namespace campus
