#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "httplib.h"

#include "backend.hpp"
#include "wire.hpp"

namespace opinionforge {

namespace detail {

// Bounds the number of requests in flight.
class ConcurrencyLimit {
 public:
  explicit ConcurrencyLimit(int limit) : available_(limit) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

class ConcurrencySlot {
 public:
  explicit ConcurrencySlot(ConcurrencyLimit& limit) : limit_(limit) { limit_.acquire(); }
  ~ConcurrencySlot() { limit_.release(); }
  ConcurrencySlot(const ConcurrencySlot&) = delete;
  ConcurrencySlot& operator=(const ConcurrencySlot&) = delete;

 private:
  ConcurrencyLimit& limit_;
};

}  // namespace detail

/// Client for a sidecar speaking the JSON wire protocol.
///
/// Transport failures, non-2xx statuses and unparseable bodies are retried up
/// to max_retries times with exponential backoff (backoff_base * 2^attempt).
/// A body that parses but violates the schema raises ProtocolError at once.
class HttpBackend final : public ModelBackend {
 public:
  explicit HttpBackend(BackendConfig config)
      : config_(std::move(config)), limit_(config_.max_concurrency) {
    config_.validate();
  }

  QaResult qa(std::string_view question, std::string_view context) override {
    return wire::parse_qa_response(call("/qa", wire::qa_request(question, context)));
  }

  std::string summarize(std::string_view text, int max_output_tokens) override {
    return wire::parse_summarize_response(
        call("/summarize", wire::summarize_request(text, max_output_tokens)));
  }

  std::vector<Embedding> embed(const std::vector<std::string>& sentences) override {
    return wire::parse_embed_response(call("/embed", wire::embed_request(sentences)),
                                      sentences.size());
  }

  SentimentProbs sentiment(std::string_view text) override {
    return wire::parse_sentiment_response(call("/sentiment", wire::sentiment_request(text)));
  }

  bool healthy() override {
    detail::ConcurrencySlot slot(limit_);
    auto client = make_client();
    auto res = client.Get("/health");
    if (!res || res->status != 200) return false;
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    return !body.is_discarded() && wire::is_healthy_response(body);
  }

  std::string describe() const override { return "http(" + config_.base_url + ")"; }

  /// Total retry attempts issued so far, across all calls.
  int retries_performed() const { return retries_.load(); }

  /// POSTs a JSON body and returns the parsed JSON response.
  nlohmann::json call(std::string_view endpoint, const nlohmann::json& request) {
    std::string body = request.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    std::string last_failure;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        ++retries_;
        std::this_thread::sleep_for(config_.backoff_base * (1LL << (attempt - 1)));
      }
      detail::ConcurrencySlot slot(limit_);
      auto client = make_client();
      auto res = client.Post(std::string(endpoint), body, "application/json");
      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        last_failure = "HTTP status " + std::to_string(res->status);
        continue;
      }
      auto parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) {
        last_failure = "malformed JSON response";
        continue;
      }
      return parsed;
    }
    throw BackendUnavailable(std::string(endpoint) + " failed after " +
                             std::to_string(config_.max_retries + 1) +
                             " attempts: " + last_failure);
  }

 private:
  httplib::Client make_client() const {
    httplib::Client client(config_.base_url);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    return client;
  }

  BackendConfig config_;
  detail::ConcurrencyLimit limit_;
  std::atomic<int> retries_{0};
};

}  // namespace opinionforge
