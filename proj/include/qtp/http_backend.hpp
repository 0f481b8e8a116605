#pragma once

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "qtp/backend.hpp"
#include "qtp/errors.hpp"

namespace qtp {

/// Chat + embeddings over the OpenAI-compatible wire protocol.  The
/// endpoint URL carries scheme, host, port, and an optional path prefix
/// (e.g. "https://api.example.com/v1"); /chat/completions and /embeddings
/// are appended to it.
class OpenAiBackend : public Backend {
 public:
  explicit OpenAiBackend(const std::string& endpoint_url) {
    std::string url = endpoint_url;
    std::size_t scheme_end = url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    std::size_t path_start = url.find('/', host_start);
    if (path_start != std::string::npos) {
      path_prefix_ = url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
      url = url.substr(0, path_start);
    }
    base_url_ = url;
  }

  bool network() const override { return true; }

  std::string complete(const BackendProfile& profile, const std::vector<ChatMessage>& messages,
                       const std::string&) override {
    json body;
    body["model"] = profile.model;
    body["temperature"] = profile.temperature;
    body["max_tokens"] = profile.max_tokens;
    body["messages"] = json::array();
    for (const auto& m : messages)
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    json reply = post(profile, "/chat/completions", body);
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw MalformedResponseError(std::string("chat completion: ") + e.what());
    }
  }

  std::vector<double> embed(const BackendProfile& profile, const std::string& text) override {
    json body;
    body["model"] = profile.model;
    body["input"] = text;
    json reply = post(profile, "/embeddings", body);
    try {
      return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw MalformedResponseError(std::string("embedding: ") + e.what());
    }
  }

 private:
  json post(const BackendProfile& profile, const std::string& route, const json& body) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    httplib::Headers headers;
    const char* key = std::getenv(profile.api_key_env.c_str());
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);

    auto res = client.Post(path_prefix_ + route, headers, body.dump(), "application/json");
    if (!res) throw TransportError(httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) throw RetryableStatus(res->status);
    if (res->status < 200 || res->status >= 300)
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw MalformedResponseError(e.what());
    }
  }

  std::string base_url_;
  std::string path_prefix_;
};

}  // namespace qtp
