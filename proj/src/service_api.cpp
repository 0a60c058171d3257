#include "campus/service_api.hpp"

#include <httplib.h>

#include <functional>

#include "campus/error.hpp"
#include "campus/json_codec.hpp"

namespace campus {

namespace {

using codec::json;

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

// Runs a handler and turns every failure into an ApiError body.
void guarded(httplib::Response& res, const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    reply(res, http_status(e.code()), codec::encode_error(e));
  } catch (const json::exception& e) {
    reply(res, 400, codec::encode_error(Error(Errc::parse_error, e.what(), "body")));
  } catch (const std::invalid_argument& e) {
    reply(res, 400, codec::encode_error(Error(Errc::parse_error, e.what(), "body")));
  }
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

std::string required_param(const httplib::Request& req, const char* key) {
  auto value = param(req, key);
  if (!value || value->empty())
    throw Error(Errc::parse_error, std::string("missing query parameter '") + key + "'", key);
  return *value;
}

json list(const auto& items) {
  json out = json::array();
  for (const auto& item : items) out.push_back(codec::encode(item));
  return out;
}

}  // namespace

ServiceApi::ServiceApi(NotificationStore& store, const Clock& clock, ServiceOptions options)
    : store_(store), clock_(clock), options_(options), gateway_(store, clock, options.skew_window) {}

void ServiceApi::mount(httplib::Server& server) {
  // SO_REUSEADDR only: the library default (SO_REUSEPORT) lets a second server share a busy port.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server.set_tcp_nodelay(true);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type, X-Sender"},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}});
  });

  server.Post("/notifications", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string sender = req.get_header_value("X-Sender");
      if (sender.empty()) throw Error(Errc::parse_error, "X-Sender header is required", "X-Sender");
      auto draft = codec::decode_draft(codec::parse(req.body));
      reply(res, 201, codec::encode(store_.create_notification(std::move(draft), sender, clock_.now())));
    });
  });

  server.Get("/notifications", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      SearchQuery query;
      query.poster = param(req, "poster");
      query.title_substring = param(req, "title");
      if (auto day = param(req, "created_on")) {
        try {
          query.created_on = parse_date(*day);
        } catch (const Error& e) {
          throw Error(Errc::parse_error, e.what(), "created_on");
        }
      }
      reply(res, 200, list(store_.search(query)));
    });
  });

  server.Post("/profiles", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto profile = codec::decode_profile(codec::parse(req.body));
      const json body = codec::encode(profile);
      store_.register_profile(std::move(profile));
      reply(res, 201, body);
    });
  });
  server.Get("/profiles", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, list(store_.profiles())); });
  });
  server.Get("/courses", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, json(store_.courses())); });
  });

  server.Post("/readers", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto reader = codec::decode_reader(codec::parse(req.body));
      const json body = codec::encode(reader);
      store_.register_reader(std::move(reader));
      reply(res, 201, body);
    });
  });
  server.Get("/readers", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, list(store_.readers())); });
  });

  server.Post("/events", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, codec::encode(gateway_.ingest_wire(req.body))); });
  });

  server.Get("/feed", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string reader_id = required_param(req, "reader_id");
      const TagId tag{required_param(req, "tag_id")};
      Instant now = clock_.now();
      if (auto pinned = param(req, "now")) {
        if (!options_.allow_now_override)
          throw Error(Errc::parse_error, "the now parameter is only accepted in scenario mode", "now");
        now = parse_rfc3339(*pinned);
      }
      const auto feed = store_.feed_for(tag, reader_id, now);
      const auto profile = store_.profile(tag);
      reply(res, 200, codec::encode(make_payload(reader_id, profile ? profile->display_name : "", feed)));
    });
  });

  server.Put("/read-state", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = codec::parse(req.body);
      const json& id = codec::require(body, "notification_id");
      if (!id.is_number_unsigned())
        throw Error(Errc::parse_error, "notification_id must be an integer", "notification_id");
      const std::string tag = codec::require_string(body, "tag_id");
      if (tag.empty()) throw Error(Errc::parse_error, "tag_id must not be empty", "tag_id");
      const auto state = store_.set_read_state(TagId{tag}, id.get<NotificationId>(),
                                               parse_read_status(codec::require_string(body, "state")));
      reply(res, 200, codec::encode(state));
    });
  });
}

EventTransport http_transport(const std::string& host, int port) {
  auto client = std::make_shared<httplib::Client>(host, port);
  client->set_keep_alive(true);
  client->set_tcp_nodelay(true);
  return [client](const std::string& body) -> WireResponse {
    auto result = client->Post("/events", body, kJson);
    if (!result) throw std::runtime_error("POST /events failed: " + httplib::to_string(result.error()));
    return {result->status, result->body};
  };
}

}  // namespace campus
