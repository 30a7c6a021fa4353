#pragma once

#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "httplib.h"

#include "backend.hpp"
#include "wire.hpp"

namespace opinionforge {

namespace detail {

inline void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                  "application/json");
}

inline void handle(const httplib::Request& req, httplib::Response& res,
                   const std::function<nlohmann::json(const nlohmann::json&)>& fn) {
  auto body = nlohmann::json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    reply_json(res, 400, {{"error", "request body must be a JSON object"}});
    return;
  }
  try {
    reply_json(res, 200, fn(body));
  } catch (const nlohmann::json::exception& e) {
    reply_json(res, 400, {{"error", e.what()}});
  } catch (const std::exception& e) {
    reply_json(res, 500, {{"error", e.what()}});
  }
}

}  // namespace detail

/// Exposes any ModelBackend over the wire protocol. The backend must outlive
/// the server.
inline std::unique_ptr<httplib::Server> make_wire_server(ModelBackend& backend) {
  auto server = std::make_unique<httplib::Server>();
  server->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    detail::reply_json(res, 200, wire::health_response());
  });
  server->Post("/qa", [&backend](const httplib::Request& req, httplib::Response& res) {
    detail::handle(req, res, [&](const nlohmann::json& body) {
      return wire::qa_response(backend.qa(body.at("question").get<std::string>(),
                                          body.at("context").get<std::string>()));
    });
  });
  server->Post("/summarize", [&backend](const httplib::Request& req, httplib::Response& res) {
    detail::handle(req, res, [&](const nlohmann::json& body) {
      return wire::summarize_response(backend.summarize(body.at("text").get<std::string>(),
                                                        body.at("max_tokens").get<int>()));
    });
  });
  server->Post("/embed", [&backend](const httplib::Request& req, httplib::Response& res) {
    detail::handle(req, res, [&](const nlohmann::json& body) {
      return wire::embed_response(
          backend.embed(body.at("sentences").get<std::vector<std::string>>()));
    });
  });
  server->Post("/sentiment", [&backend](const httplib::Request& req, httplib::Response& res) {
    detail::handle(req, res, [&](const nlohmann::json& body) {
      return wire::sentiment_response(backend.sentiment(body.at("text").get<std::string>()));
    });
  });
  return server;
}

}  // namespace opinionforge
