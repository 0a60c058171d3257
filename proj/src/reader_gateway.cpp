#include "campus/reader_gateway.hpp"

#include <thread>

#include "campus/json_codec.hpp"

namespace campus {

std::string_view api_error_code(Errc code) {
  switch (code) {
    case Errc::parse_error:
    case Errc::malformed_event:
    case Errc::invalid_rule:
    case Errc::duplicate:
    case Errc::script_error:
      return "invalid_request";
    case Errc::unknown_tag: return "unknown_tag";
    case Errc::unknown_reader: return "unknown_reader";
    case Errc::expiry_in_past: return "expiry_in_past";
    case Errc::invalid_targeting: return "invalid_targeting";
    case Errc::not_found: return "not_found";
    case Errc::invalid_query: return "invalid_query";
    case Errc::clock_skew: return "clock_skew";
  }
  return "invalid_request";
}

int http_status(Errc code) {
  switch (code) {
    case Errc::unknown_tag:
    case Errc::unknown_reader:
    case Errc::not_found:
      return 404;
    case Errc::duplicate:
      return 409;
    default:
      return 400;
  }
}

DisplayPayload make_payload(std::string_view reader_id, std::string display_name,
                            const std::vector<FeedEntry>& feed) {
  DisplayPayload payload{std::string(reader_id), std::move(display_name), {}};
  payload.entries.reserve(feed.size());
  for (const auto& entry : feed)
    payload.entries.push_back({entry.notification.id, entry.notification.title, entry.notification.body,
                               entry.notification.sender_name, entry.notification.created_at, entry.read,
                               entry.matched_via});
  return payload;
}

ReaderGateway::ReaderGateway(NotificationStore& store, const Clock& clock, std::chrono::seconds skew_window)
    : store_(store), clock_(clock), skew_window_(skew_window) {}

DisplayPayload ReaderGateway::payload_for(const TagDetectionEvent& event) const {
  auto feed = store_.feed_for(event.tag_id, event.reader_id, event.timestamp);
  const auto profile = store_.profile(event.tag_id);
  return make_payload(event.reader_id, profile ? profile->display_name : std::string{}, feed);
}

DisplayPayload ReaderGateway::ingest_event(const TagDetectionEvent& event) {
  if (event.tag_id.empty()) throw Error(Errc::malformed_event, "event has no tag id", "tag_id");
  if (event.reader_id.empty()) throw Error(Errc::malformed_event, "event has no reader id", "reader_id");
  if (event.nonce.empty()) throw Error(Errc::malformed_event, "event has no nonce", "nonce");

  {
    std::lock_guard lock(mutex_);
    if (const auto it = seen_.find(event.nonce); it != seen_.end()) {
      if (!(it->second == event))
        throw Error(Errc::malformed_event, "nonce '" + event.nonce + "' was already used by another event",
                    "nonce");
      return payload_for(event);
    }
  }

  if (!store_.reader(event.reader_id))
    throw Error(Errc::unknown_reader, "reader '" + event.reader_id + "' is not registered", "reader_id");
  const Instant now = clock_.now();
  const auto skew = event.timestamp > now ? event.timestamp - now : now - event.timestamp;
  if (skew > skew_window_)
    throw Error(Errc::clock_skew,
                "event timestamp " + format_rfc3339(event.timestamp) + " is " + std::to_string(skew.count()) +
                    " s away from server time " + format_rfc3339(now),
                "timestamp");

  DisplayPayload payload = payload_for(event);

  std::lock_guard lock(mutex_);
  if (seen_.emplace(event.nonce, event).second) {
    seen_order_.push_back(event.nonce);
    ++accepted_;
  }
  forget_stale_nonces(now);
  return payload;
}

// A nonce older than the skew window can only come back as a rejected event,
// so its entry is no longer needed.
void ReaderGateway::forget_stale_nonces(Instant now) {
  while (!seen_order_.empty()) {
    const auto it = seen_.find(seen_order_.front());
    if (it != seen_.end() && now - it->second.timestamp <= skew_window_) break;
    if (it != seen_.end()) seen_.erase(it);
    seen_order_.pop_front();
  }
}

DisplayPayload ReaderGateway::ingest_wire(std::string_view body) {
  return ingest_event(codec::decode_event(codec::parse(body, Errc::malformed_event)));
}

std::size_t ReaderGateway::accepted_events() const {
  std::lock_guard lock(mutex_);
  return accepted_;
}

std::vector<SimulationRecord> simulate_readers(const std::vector<TagDetectionEvent>& plan, Pacing pacing,
                                               const EventTransport& transport, const Sleeper& sleep,
                                               const std::function<void(const TagDetectionEvent&)>& before_send) {
  const Sleeper pause = sleep ? sleep : Sleeper([](std::chrono::seconds s) { std::this_thread::sleep_for(s); });
  std::vector<SimulationRecord> records;
  records.reserve(plan.size());

  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& event = plan[i];
    if (pacing == Pacing::real_time && i > 0 && event.timestamp > plan[i - 1].timestamp)
      pause(event.timestamp - plan[i - 1].timestamp);
    if (before_send) before_send(event);

    SimulationRecord record{event, std::nullopt, std::nullopt, {}};
    try {
      const WireResponse response = transport(codec::encode(event).dump());
      const auto body = codec::parse(response.body);
      if (response.status == 200) {
        record.payload = codec::decode_payload(body);
      } else {
        record.error_code = codec::optional_string(body, "code");
        record.error_message = codec::optional_string(body, "message");
      }
    } catch (const std::exception& e) {
      record.error_code = "transport";
      record.error_message = e.what();
    }
    records.push_back(std::move(record));
  }
  return records;
}

EventTransport in_process_transport(ReaderGateway& gateway) {
  return [&gateway](const std::string& body) -> WireResponse {
    try {
      return {200, codec::encode(gateway.ingest_wire(body)).dump()};
    } catch (const Error& e) {
      return {http_status(e.code()), codec::encode_error(e).dump()};
    }
  };
}

}  // namespace campus
