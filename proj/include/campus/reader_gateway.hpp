#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "campus/clock.hpp"
#include "campus/context_model.hpp"
#include "campus/error.hpp"
#include "campus/notification_store.hpp"

namespace campus {

struct DisplayEntry {
  NotificationId notification_id = 0;
  std::string title;
  std::string body;
  std::string sender_name;
  Instant created_at;
  bool read = false;
  MatchGround matched_via = MatchGround::preference_broadcast;

  friend bool operator==(const DisplayEntry&, const DisplayEntry&) = default;
};

struct DisplayPayload {
  std::string reader_id;
  std::string display_name;
  std::vector<DisplayEntry> entries;

  friend bool operator==(const DisplayPayload&, const DisplayPayload&) = default;
};

DisplayPayload make_payload(std::string_view reader_id, std::string display_name,
                            const std::vector<FeedEntry>& feed);

inline constexpr std::chrono::seconds kDefaultSkewWindow{300};

// Front door for reader traffic. Validates each detection, deduplicates by
// nonce and answers with the feed for the screen next to the reader.
class ReaderGateway {
 public:
  ReaderGateway(NotificationStore& store, const Clock& clock,
                std::chrono::seconds skew_window = kDefaultSkewWindow);

  /// Throws Errc::malformed_event, Errc::unknown_reader or Errc::clock_skew.
  DisplayPayload ingest_event(const TagDetectionEvent& event);
  /// Decodes the POST /events body, then ingests it.
  DisplayPayload ingest_wire(std::string_view body);

  /// Distinct events accepted so far (re-deliveries are not counted).
  std::size_t accepted_events() const;

 private:
  DisplayPayload payload_for(const TagDetectionEvent& event) const;
  void forget_stale_nonces(Instant now);

  NotificationStore& store_;
  const Clock& clock_;
  std::chrono::seconds skew_window_;

  mutable std::mutex mutex_;
  std::map<std::string, TagDetectionEvent, std::less<>> seen_;
  std::deque<std::string> seen_order_;
  std::size_t accepted_ = 0;
};

// ---------------------------------------------------------------------------
// Reader simulator

enum class Pacing { real_time, as_fast_as_possible };

/// Wire-level answer from whatever carries events to the server.
struct WireResponse {
  int status = 0;
  std::string body;
};

using EventTransport = std::function<WireResponse(const std::string& body)>;
using Sleeper = std::function<void(std::chrono::seconds)>;

struct SimulationRecord {
  TagDetectionEvent event;
  std::optional<DisplayPayload> payload;
  std::optional<std::string> error_code;
  std::string error_message;
};

/// Sends every planned event through `transport` in plan order and collects
/// one record per event. Failing events are recorded, never fatal. In
/// real-time mode the gap between consecutive timestamps is passed to `sleep`;
/// `before_send` lets callers steer a pinned server clock.
std::vector<SimulationRecord> simulate_readers(
    const std::vector<TagDetectionEvent>& plan, Pacing pacing, const EventTransport& transport,
    const Sleeper& sleep = {}, const std::function<void(const TagDetectionEvent&)>& before_send = {});

/// Transport that talks to an in-process gateway using the same JSON bodies.
EventTransport in_process_transport(ReaderGateway& gateway);

/// Maps a library error to the wire error code used by the HTTP API.
std::string_view api_error_code(Errc code);
int http_status(Errc code);

}  // namespace campus
