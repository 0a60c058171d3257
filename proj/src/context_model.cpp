#include "campus/context_model.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <vector>

#include "campus/error.hpp"

namespace campus {

namespace {

using namespace std::chrono;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// Parses a run of ASCII digits of the given width range; -1 on failure.
int parse_digits(std::string_view s, std::size_t min_width, std::size_t max_width) {
  if (s.size() < min_width || s.size() > max_width) return -1;
  for (char c : s)
    if (!is_digit(c)) return -1;
  int value = 0;
  std::from_chars(s.data(), s.data() + s.size(), value);
  return value;
}

struct CategoryName {
  PreferenceCategory category;
  std::string_view canonical;
};

constexpr std::array<CategoryName, 5> kCategories{{
    {PreferenceCategory::book, "Book"},
    {PreferenceCategory::class_, "Class"},
    {PreferenceCategory::sports, "Sports"},
    {PreferenceCategory::events, "Events"},
    {PreferenceCategory::misc, "Misc"},
}};

}  // namespace

TagId::TagId(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw Error(Errc::parse_error, "tag id must not be empty", "tag_id");
}

PreferenceCategory parse_category(std::string_view text) {
  const std::string token = normalize_token(text);
  for (const auto& entry : kCategories)
    if (normalize_token(entry.canonical) == token) return entry.category;
  throw Error(Errc::parse_error, "unknown preference category '" + std::string(text) + "'",
              "preference");
}

std::string_view to_string(PreferenceCategory category) {
  for (const auto& entry : kCategories)
    if (entry.category == category) return entry.canonical;
  return "Misc";
}

std::string normalize_token(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_gap = false;
  for (char c : trim(text)) {
    if (is_space(c)) {
      pending_gap = true;
      continue;
    }
    if (pending_gap) {
      out.push_back('_');
      pending_gap = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool operator==(const Location& a, const Location& b) {
  return normalize_token(a.building_name) == normalize_token(b.building_name) &&
         normalize_token(a.venue_name) == normalize_token(b.venue_name);
}

bool StudentProfile::enrolled_in(std::string_view course_id) const {
  const std::string wanted = normalize_token(course_id);
  for (const auto& course : course_ids)
    if (normalize_token(course) == wanted) return true;
  return false;
}

year_month_day parse_date(std::string_view text) {
  text = trim(text);
  auto bad = [&] {
    return Error(Errc::parse_error, "malformed date '" + std::string(text) + "'", "date");
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  const int y = parse_digits(text.substr(0, 4), 4, 4);
  const int m = parse_digits(text.substr(5, 2), 2, 2);
  const int d = parse_digits(text.substr(8, 2), 2, 2);
  if (y < 0 || m < 0 || d < 0) throw bad();
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw bad();
  return ymd;
}

std::string format_date(year_month_day date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

ExpirySpec parse_expiry(std::string_view text) {
  const auto parts = split_ws(text);
  if (parts.size() != 3)
    throw Error(Errc::parse_error,
                "expiry must look like 'YYYY-MM-DD AM|PM H:MM', got '" + std::string(text) + "'",
                "expiry");

  ExpirySpec spec;
  spec.date = parse_date(parts[0]);

  const std::string meridiem = normalize_token(parts[1]);
  if (meridiem == "am")
    spec.meridiem = Meridiem::am;
  else if (meridiem == "pm")
    spec.meridiem = Meridiem::pm;
  else
    throw Error(Errc::parse_error, "unknown meridiem '" + std::string(parts[1]) + "'", "meridiem");

  const std::string_view clock = parts[2];
  const auto colon = clock.find(':');
  if (colon == std::string_view::npos)
    throw Error(Errc::parse_error, "time must be H:MM, got '" + std::string(clock) + "'", "hour");
  spec.hour = parse_digits(clock.substr(0, colon), 1, 2);
  if (spec.hour < 1 || spec.hour > 12)
    throw Error(Errc::parse_error, "hour must be 1..12, got '" + std::string(clock.substr(0, colon)) + "'",
                "hour");
  spec.minute = parse_digits(clock.substr(colon + 1), 2, 2);
  if (spec.minute < 0 || spec.minute > 59)
    throw Error(Errc::parse_error,
                "minute must be 00..59, got '" + std::string(clock.substr(colon + 1)) + "'", "minute");
  return spec;
}

std::string format_expiry(const ExpirySpec& spec) {
  char buf[16];
  std::snprintf(buf, sizeof buf, " %s %02d:%02d", spec.meridiem == Meridiem::am ? "AM" : "PM",
                spec.hour, spec.minute);
  return format_date(spec.date) + buf;
}

Instant to_instant(const ExpirySpec& spec) {
  const int hour24 = spec.hour % 12 + (spec.meridiem == Meridiem::pm ? 12 : 0);
  return Instant{sys_days{spec.date}} + hours{hour24} + minutes{spec.minute};
}

ExpirySpec expiry_from_instant(Instant at) {
  const auto day_start = floor<days>(at);
  const hh_mm_ss tod{at - day_start};
  const int hour24 = static_cast<int>(tod.hours().count());
  ExpirySpec spec;
  spec.date = year_month_day{day_start};
  spec.meridiem = hour24 < 12 ? Meridiem::am : Meridiem::pm;
  spec.hour = hour24 % 12 == 0 ? 12 : hour24 % 12;
  spec.minute = static_cast<int>(tod.minutes().count());
  return spec;
}

std::string format_rfc3339(Instant at) {
  const auto day_start = floor<days>(at);
  const hh_mm_ss tod{at - day_start};
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02d:%02d:%02dZ", static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()));
  return format_date(year_month_day{day_start}) + buf;
}

Instant parse_rfc3339(std::string_view text) {
  const std::string original{text};
  auto bad = [&] { return Error(Errc::parse_error, "malformed timestamp '" + original + "'", "timestamp"); };
  text = trim(text);
  if (text.size() < 20 || (text[10] != 'T' && text[10] != 't') || text[13] != ':' || text[16] != ':')
    throw bad();
  const year_month_day date = [&] {
    try {
      return parse_date(text.substr(0, 10));
    } catch (const Error&) {
      throw bad();
    }
  }();
  const int h = parse_digits(text.substr(11, 2), 2, 2);
  const int m = parse_digits(text.substr(14, 2), 2, 2);
  const int s = parse_digits(text.substr(17, 2), 2, 2);
  if (h < 0 || h > 23 || m < 0 || m > 59 || s < 0 || s > 60) throw bad();

  std::string_view rest = text.substr(19);
  if (!rest.empty() && rest.front() == '.') {
    rest.remove_prefix(1);
    std::size_t n = 0;
    while (n < rest.size() && is_digit(rest[n])) ++n;
    if (n == 0) throw bad();
    rest.remove_prefix(n);
  }

  seconds offset{0};
  if (rest == "Z" || rest == "z") {
  } else if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') && rest[3] == ':') {
    const int oh = parse_digits(rest.substr(1, 2), 2, 2);
    const int om = parse_digits(rest.substr(4, 2), 2, 2);
    if (oh < 0 || oh > 23 || om < 0 || om > 59) throw bad();
    offset = hours{oh} + minutes{om};
    if (rest[0] == '-') offset = -offset;
  } else {
    throw bad();
  }
  return Instant{sys_days{date}} + hours{h} + minutes{m} + seconds{s} - offset;
}

Context assemble_context(const TagDetectionEvent& event, const ProfileRegistry& profiles,
                         const ReaderRegistry& readers) {
  const auto reader = readers.find(event.reader_id);
  if (reader == readers.end())
    throw Error(Errc::unknown_reader, "reader '" + event.reader_id + "' is not registered", "reader_id");
  const auto profile = profiles.find(event.tag_id);
  if (profile == profiles.end())
    throw Error(Errc::unknown_tag, "tag '" + event.tag_id.str() + "' is not registered", "tag_id");
  return Context{event.timestamp, profile->second, reader->second.location};
}

}  // namespace campus
