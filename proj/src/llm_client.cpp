#include "absa/llm_client.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "absa/errors.hpp"
#include "absa/sha256.hpp"

namespace absa::llm {

using json = nlohmann::json;

std::string cache_key(const LlmRequest& request) {
  if (request.messages.empty()) throw ValidationError("llm request: messages must be nonempty");
  if (request.temperature < 0.0) throw ValidationError("llm request: temperature must be >= 0");
  json canonical;
  canonical["model"] = request.model_name;
  canonical["temperature"] = request.temperature;
  canonical["max_tokens"] = request.max_tokens;
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  canonical["messages"] = messages;
  return sha256_hex(canonical.dump());
}

std::vector<ExtractionRecord> parse_extraction_payload(std::string_view text) {
  const auto fail = [&text](const std::string& why) {
    throw SchemaError("extraction payload: " + why, std::string(text));
  };
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("not valid JSON (") + e.what() + ")");
  }
  if (!doc.is_array()) fail("expected a JSON array");
  std::vector<ExtractionRecord> records;
  for (const auto& item : doc) {
    if (!item.is_object()) fail("array items must be objects");
    if (item.size() != 3 || !item.contains("term") || !item.contains("category") ||
        !item.contains("polarity")) {
      fail("objects must carry exactly the keys term, category, polarity");
    }
    for (const char* key : {"term", "category", "polarity"}) {
      if (!item.at(key).is_string()) fail(std::string("key '") + key + "' must be a string");
    }
    records.push_back({item.at("term").get<std::string>(), item.at("category").get<std::string>(),
                       item.at("polarity").get<std::string>()});
  }
  return records;
}

Client::Client(std::filesystem::path cache_dir, RetryPolicy retry, int max_in_flight)
    : cache_dir_(std::move(cache_dir)), retry_(retry), max_in_flight_(max_in_flight) {
  if (retry_.max_attempts < 1) throw ValidationError("retry policy: max_attempts must be >= 1");
  if (max_in_flight_ < 1) throw ValidationError("client: max_in_flight must be >= 1");
  std::filesystem::create_directories(cache_dir_);
}

std::optional<LlmResponse> Client::cache_lookup(const std::string& key) {
  const auto path = cache_dir_ / (key + ".json");
  std::string text;
  {
    std::lock_guard lock(mutex_);
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return std::nullopt;
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError("cache entry " + path.string() + ": invalid JSON: " + e.what());
  }
  LlmResponse response;
  response.text = doc.at("response_text").get<std::string>();
  response.prompt_tokens = doc.value("prompt_tokens", 0L);
  response.completion_tokens = doc.value("completion_tokens", 0L);
  response.cached = true;
  return response;
}

void Client::cache_store(const std::string& key, const LlmRequest& request, const LlmResponse& response) {
  json doc;
  doc["key"] = key;
  doc["request"] = {{"model", request.model_name},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_tokens},
                    {"messages", json::array()}};
  for (const auto& m : request.messages) {
    doc["request"]["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  doc["response_text"] = response.text;
  doc["prompt_tokens"] = response.prompt_tokens;
  doc["completion_tokens"] = response.completion_tokens;
  doc["timestamp"] = static_cast<long>(
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
  const auto path = cache_dir_ / (key + ".json");
  const auto tmp = cache_dir_ / (key + ".json.tmp");
  std::lock_guard lock(mutex_);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

LlmResponse Client::complete(const LlmRequest& request) {
  const std::string key = cache_key(request);
  if (auto hit = cache_lookup(key)) return *hit;

  json body;
  body["model"] = request.model_name;
  body["messages"] = json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* token = std::getenv("ABSA_LLM_API_KEY"); token != nullptr && token[0] != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  {
    std::unique_lock lock(mutex_);
    slot_available_.wait(lock, [this] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
  }
  struct SlotGuard {
    Client* client;
    ~SlotGuard() {
      std::lock_guard lock(client->mutex_);
      --client->in_flight_;
      client->slot_available_.notify_one();
    }
  } slot_guard{this};

  std::string last_error;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double scale = std::pow(retry_.factor, attempt - 2);
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<long>(static_cast<double>(retry_.base_delay.count()) * scale)));
    }
    httplib::Client http(request.endpoint_url);
    http.set_connection_timeout(10);
    http.set_read_timeout(60);
    network_calls_.fetch_add(1);
    httplib::Result result = http.Post("/v1/chat/completions", headers, payload, "application/json");
    if (!result) {
      last_error = "connection failure (" + httplib::to_string(result.error()) + ")";
      continue;
    }
    if (result->status >= 400 && result->status < 500) {
      throw TransportError("llm endpoint returned status " + std::to_string(result->status) +
                               (result->status == 401 ? " (authorization failed)" : ""),
                           result->status);
    }
    if (result->status != 200) {
      last_error = "status " + std::to_string(result->status);
      continue;
    }
    json doc;
    try {
      doc = json::parse(result->body);
    } catch (const json::exception& e) {
      throw SchemaError(std::string("llm response is not valid JSON: ") + e.what(), result->body);
    }
    LlmResponse response;
    try {
      response.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw SchemaError("llm response is missing choices[0].message.content", result->body);
    }
    if (doc.contains("usage") && doc["usage"].is_object()) {
      response.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
      response.completion_tokens = doc["usage"].value("completion_tokens", 0L);
    }
    response.cached = false;
    cache_store(key, request, response);
    return response;
  }
  throw TransportError("llm request failed after " + std::to_string(retry_.max_attempts) +
                           " attempts: " + last_error,
                       0);
}

}  // namespace absa::llm
