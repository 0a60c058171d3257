#pragma once

#include <memory>
#include <string>

#include "campus/clock.hpp"
#include "campus/notification_store.hpp"
#include "campus/reader_gateway.hpp"

namespace httplib {
class Server;
}

namespace campus {

struct ServiceOptions {
  // Lets GET /feed take a `now` query parameter. Scenario/test mode only.
  bool allow_now_override = false;
  std::chrono::seconds skew_window = kDefaultSkewWindow;
};

// HTTP surface over the store and the reader gateway.
//
//   POST /notifications            staff post (sender from X-Sender)
//   GET  /notifications?poster=|created_on=|title=
//   POST /profiles   GET /profiles   GET /courses
//   POST /readers    GET /readers
//   POST /events                   reader wire protocol
//   GET  /feed?reader_id=&tag_id=[&now=]
//   PUT  /read-state {tag_id, notification_id, state}
//   GET  /health
class ServiceApi {
 public:
  ServiceApi(NotificationStore& store, const Clock& clock, ServiceOptions options = {});

  void mount(httplib::Server& server);

  ReaderGateway& gateway() noexcept { return gateway_; }

 private:
  NotificationStore& store_;
  const Clock& clock_;
  ServiceOptions options_;
  ReaderGateway gateway_;
};

/// Posts event bodies to http://host:port/events over a keep-alive connection.
EventTransport http_transport(const std::string& host, int port);

}  // namespace campus
