#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace absa::llm {

struct Message {
  std::string role;
  std::string content;
  bool operator==(const Message&) const = default;
};

struct LlmRequest {
  std::string endpoint_url;  // e.g. http://127.0.0.1:8080
  std::string model_name;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = 512;
};

struct LlmResponse {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool cached = false;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;
};

// Transport trouble: unreachable endpoint, HTTP error status, retries
// exhausted. `status` is 0 for pure connection failures.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int status_code)
      : std::runtime_error(what), status(status_code) {}
  int status = 0;
};

// Payload that does not match the expected shape; carries the raw text.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::string raw_payload)
      : std::runtime_error(what), payload(std::move(raw_payload)) {}
  std::string payload;
};

// 256-bit digest over the canonical request encoding: model, temperature,
// max_tokens, messages in order. The endpoint is excluded so recorded
// fixtures replay against any stub address.
std::string cache_key(const LlmRequest& request);

// Strict contract for extraction output: exactly one JSON array of
// objects with exactly the string keys term/category/polarity.
struct ExtractionRecord {
  std::string term;
  std::string category;
  std::string polarity;
  bool operator==(const ExtractionRecord&) const = default;
};

std::vector<ExtractionRecord> parse_extraction_payload(std::string_view text);

// OpenAI-compatible chat-completion client with a disk cache and bounded
// retries. Thread-safe; at most `max_in_flight` requests on the wire.
class Client {
 public:
  explicit Client(std::filesystem::path cache_dir, RetryPolicy retry = {}, int max_in_flight = 2);

  // Cache hit: no network, cached=true. Miss: POST
  // <endpoint>/v1/chat/completions, retrying transport failures and 5xx
  // with exponential backoff; 4xx fails immediately. Successful responses
  // are persisted before returning.
  LlmResponse complete(const LlmRequest& request);

  long network_calls() const { return network_calls_.load(); }
  const std::filesystem::path& cache_dir() const { return cache_dir_; }

 private:
  std::optional<LlmResponse> cache_lookup(const std::string& key);
  void cache_store(const std::string& key, const LlmRequest& request, const LlmResponse& response);

  std::filesystem::path cache_dir_;
  RetryPolicy retry_;
  int max_in_flight_;
  int in_flight_ = 0;
  std::mutex mutex_;  // guards cache files and the in-flight budget
  std::condition_variable slot_available_;
  std::atomic<long> network_calls_{0};
};

}  // namespace absa::llm
