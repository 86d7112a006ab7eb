#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "metajudge/transport_http.hpp"

#include "helpers.hpp"

using namespace metajudge;

namespace {

// Loopback chat-completion stub for transport tests.
class StubServer {
public:
  explicit StubServer(int status, std::string body) {
    server_.Post("/v1/chat/completions",
                 [this, status, body](const httplib::Request& request,
                                      httplib::Response& response) {
                   ++hits_;
                   last_body_ = request.body;
                   last_auth_ = request.get_header_value("Authorization");
                   response.status = status;
                   response.set_content(body, "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  int hits() const { return hits_; }
  const std::string& last_body() const { return last_body_; }
  const std::string& last_auth() const { return last_auth_; }

private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::string last_body_;
  std::string last_auth_;
};

ChatRequest sample_request() {
  ChatRequest request;
  request.model = "test-model";
  request.temperature = 0.0;
  request.max_output_tokens = 64;
  request.messages = {{"system", "be fair"}, {"user", "score this"}};
  return request;
}

}  // namespace

TEST_CASE("http transport speaks the chat-completion wire format", "[transport][http]") {
  StubServer server(200, R"({
    "choices": [{"message": {"role": "assistant", "content": "Score: 4, Explanation: ok"}}],
    "usage": {"prompt_tokens": 42, "completion_tokens": 9}
  })");

  setenv("METAJUDGE_TEST_KEY", "sk-fixture", 1);
  HttpChatTransport transport(server.endpoint(), "METAJUDGE_TEST_KEY",
                              std::chrono::milliseconds(2000));
  const ChatResult result = transport.complete(sample_request());

  CHECK(result.text == "Score: 4, Explanation: ok");
  CHECK(result.input_tokens == 42);
  CHECK(result.output_tokens == 9);
  CHECK(server.last_auth() == "Bearer sk-fixture");

  const auto body = nlohmann::json::parse(server.last_body());
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("max_tokens") == 64);
  REQUIRE(body.at("messages").size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"] == "score this");
  unsetenv("METAJUDGE_TEST_KEY");
}

TEST_CASE("repeated 500s surface as a transport error after retries", "[transport][http]") {
  StubServer server(500, R"({"error": {"message": "overloaded"}})");

  AgentConfig agent;
  agent.agent_id = "remote";
  agent.retries = 2;
  agent.retry_initial_delay = std::chrono::milliseconds(0);

  HttpChatTransport transport(server.endpoint(), "", std::chrono::milliseconds(2000));
  try {
    complete_with_retries(transport, sample_request(), agent);
    FAIL("expected TransportError");
  } catch (const TransportError& error) {
    CHECK(std::string(error.what()).find("HTTP 500") != std::string::npos);
  }
  CHECK(server.hits() == agent.retries + 1);
}

TEST_CASE("malformed response bodies are transport errors", "[transport][http]") {
  SECTION("not json") {
    StubServer server(200, "<html>gateway</html>");
    HttpChatTransport transport(server.endpoint(), "", std::chrono::milliseconds(2000));
    CHECK_THROWS_AS(transport.complete(sample_request()), TransportError);
  }
  SECTION("no choices") {
    StubServer server(200, R"({"object": "chat.completion", "choices": []})");
    HttpChatTransport transport(server.endpoint(), "", std::chrono::milliseconds(2000));
    CHECK_THROWS_AS(transport.complete(sample_request()), TransportError);
  }
}

TEST_CASE("missing credential environment variables fail fast", "[transport][http]") {
  unsetenv("METAJUDGE_ABSENT_KEY");
  StubServer server(200, "{}");
  HttpChatTransport transport(server.endpoint(), "METAJUDGE_ABSENT_KEY",
                              std::chrono::milliseconds(2000));
  try {
    transport.complete(sample_request());
    FAIL("expected TransportError");
  } catch (const TransportError& error) {
    CHECK(std::string(error.what()).find("METAJUDGE_ABSENT_KEY") != std::string::npos);
  }
  CHECK(server.hits() == 0);
}

TEST_CASE("the default factory routes backends", "[transport][http]") {
  AgentConfig scripted;
  scripted.backend = ScriptedBackend{"synthetic:x"};
  CHECK(std::dynamic_pointer_cast<SyntheticTransport>(default_transport_factory(scripted)) !=
        nullptr);

  AgentConfig remote;
  remote.backend = RemoteChatBackend{"http://127.0.0.1:9/v1/chat/completions", "m"};
  CHECK(std::dynamic_pointer_cast<HttpChatTransport>(default_transport_factory(remote)) !=
        nullptr);

  CHECK_THROWS_AS(HttpChatTransport("no-scheme-here", "", std::chrono::milliseconds(100)),
                  ValidationError);
}
