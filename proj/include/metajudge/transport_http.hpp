#pragma once

// Remote chat-completion transport. Wire format: HTTP POST with a JSON body
// {model, messages[{role, content}], temperature, max_tokens}; the first
// generated message is the raw text. Credentials come from the environment
// variable named in the agent's backend config.

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "metajudge/agents.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/transport.hpp"

namespace metajudge {

class HttpChatTransport : public ChatTransport {
public:
  HttpChatTransport(std::string endpoint, std::string api_key_env,
                    std::chrono::milliseconds timeout)
      : endpoint_(std::move(endpoint)),
        api_key_env_(std::move(api_key_env)),
        timeout_(timeout) {
    split_endpoint();
  }

  ChatResult complete(const ChatRequest& request) override {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (base_.rfind("https://", 0) == 0) {
      throw TransportError("https endpoint requires a TLS-enabled build: " + endpoint_);
    }
#endif
    httplib::Client client(base_);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_));

    httplib::Headers headers;
    if (!api_key_env_.empty()) {
      const char* key = std::getenv(api_key_env_.c_str());
      if (!key || !*key) {
        throw TransportError("credential environment variable '" + api_key_env_ +
                             "' is not set");
      }
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    nlohmann::json body;
    body["model"] = request.model;
    body["messages"] = nlohmann::json::array();
    for (const auto& message : request.messages) {
      body["messages"].push_back({{"role", message.role}, {"content", message.content}});
    }
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;

    auto response = client.Post(path_, headers, body.dump(), "application/json");
    if (!response) {
      throw TransportError("connection to " + endpoint_ + " failed: " +
                           httplib::to_string(response.error()));
    }
    if (response->status < 200 || response->status >= 300) {
      throw TransportError("HTTP " + std::to_string(response->status) + " from " +
                           endpoint_ + ": " + response->body.substr(0, 200));
    }

    nlohmann::json payload;
    try {
      payload = nlohmann::json::parse(response->body);
    } catch (const nlohmann::json::exception& error) {
      throw TransportError(std::string("unparseable response body: ") + error.what());
    }

    ChatResult result;
    try {
      result.text = payload.at("choices").at(0).at("message").at("content")
                        .get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw TransportError("response carries no generated message: " +
                           response->body.substr(0, 200));
    }
    if (payload.contains("usage")) {
      result.input_tokens = payload["usage"].value("prompt_tokens", std::int64_t{0});
      result.output_tokens = payload["usage"].value("completion_tokens", std::int64_t{0});
    } else {
      result.input_tokens = estimate_tokens(request_text(request));
      result.output_tokens = estimate_tokens(result.text);
    }
    return result;
  }

private:
  void split_endpoint() {
    // scheme://authority/path -> base + path
    std::size_t scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos) {
      throw ValidationError("endpoint URL missing scheme: " + endpoint_);
    }
    std::size_t path_start = endpoint_.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base_ = endpoint_;
      path_ = "/";
    } else {
      base_ = endpoint_.substr(0, path_start);
      path_ = endpoint_.substr(path_start);
    }
  }

  std::string endpoint_;
  std::string base_;
  std::string path_;
  std::string api_key_env_;
  std::chrono::milliseconds timeout_;
};

// Scripted backends resolve offline; remote backends get an HTTP transport.
inline std::shared_ptr<ChatTransport> default_transport_factory(const AgentConfig& agent) {
  if (const auto* scripted = std::get_if<ScriptedBackend>(&agent.backend)) {
    return make_scripted_transport(scripted->fixture_id);
  }
  const auto& remote = std::get<RemoteChatBackend>(agent.backend);
  return std::make_shared<HttpChatTransport>(remote.endpoint, remote.api_key_env,
                                             agent.timeout);
}

}  // namespace metajudge
