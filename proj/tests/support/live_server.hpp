#pragma once

#include <httplib.h>

#include <stdexcept>
#include <thread>

#include "campus/service_api.hpp"

namespace campus::testing {

// Service on an ephemeral loopback port, torn down with the object.
class LiveServer {
 public:
  LiveServer(NotificationStore& store, const Clock& clock, ServiceOptions options = {})
      : api_(store, clock, options) {
    api_.mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("cannot bind a loopback port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  int port() const { return port_; }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }
  ServiceApi& api() { return api_; }

 private:
  ServiceApi api_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace campus::testing
