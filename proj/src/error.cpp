#include "campus/error.hpp"

namespace campus {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::parse_error: return "parse_error";
    case Errc::malformed_event: return "malformed_event";
    case Errc::unknown_tag: return "unknown_tag";
    case Errc::unknown_reader: return "unknown_reader";
    case Errc::expiry_in_past: return "expiry_in_past";
    case Errc::invalid_targeting: return "invalid_targeting";
    case Errc::invalid_rule: return "invalid_rule";
    case Errc::not_found: return "not_found";
    case Errc::duplicate: return "duplicate";
    case Errc::invalid_query: return "invalid_query";
    case Errc::clock_skew: return "clock_skew";
    case Errc::script_error: return "script_error";
  }
  return "unknown";
}

}  // namespace campus
