#pragma once

// In-process OpenAI-style stub endpoint for hermetic client tests.

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace absa::teststub {

// Wraps plain content into a chat-completion response body.
inline std::string chat_body(const std::string& content, long prompt_tokens = 7,
                             long completion_tokens = 3) {
  nlohmann::json doc;
  doc["choices"] = {{{"message", {{"role", "assistant"}, {"content", content}}}}};
  doc["usage"] = {{"prompt_tokens", prompt_tokens}, {"completion_tokens", completion_tokens}};
  return doc.dump();
}

class StubServer {
 public:
  using Handler = std::function<void(int call_number, const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handler_(++calls_, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_.load(); }

 private:
  httplib::Server server_;
  Handler handler_;
  std::atomic<int> calls_{0};
  std::thread thread_;
  int port_ = 0;
};

}  // namespace absa::teststub
