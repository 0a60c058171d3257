#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace campus {

enum class Errc {
  parse_error,
  malformed_event,
  unknown_tag,
  unknown_reader,
  expiry_in_past,
  invalid_targeting,
  invalid_rule,
  not_found,
  duplicate,
  invalid_query,
  clock_skew,
  script_error,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries one of the codes above and,
// where it makes sense, the name of the offending input field.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::string field = {})
      : std::runtime_error(std::move(message)), code_(code), field_(std::move(field)) {}

  Errc code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  Errc code_;
  std::string field_;
};

}  // namespace campus
