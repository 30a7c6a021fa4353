#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "span.hpp"

namespace opinionforge {

inline constexpr std::size_t kSentimentClasses = 6;
inline constexpr std::string_view kProtocolVersion = "1";

using SentimentProbs = std::array<double, kSentimentClasses>;
using Embedding = std::vector<double>;

/// The four neural capabilities the pipeline consumes. Implementations must
/// tolerate concurrent calls.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual QaResult qa(std::string_view question, std::string_view context) = 0;
  virtual std::string summarize(std::string_view text, int max_output_tokens) = 0;
  /// One vector per sentence, all of the same dimension.
  virtual std::vector<Embedding> embed(const std::vector<std::string>& sentences) = 0;
  /// Distribution over sentiment classes 0..5.
  virtual SentimentProbs sentiment(std::string_view text) = 0;

  virtual bool healthy() { return true; }
  virtual std::string describe() const = 0;
};

enum class BackendKind { Mock, Http };

inline std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::Mock ? "mock" : "http";
}

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::string base_url;  // Http only
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{250};
  int max_concurrency = 4;
  std::uint64_t seed = 0;  // Mock only
  std::optional<std::filesystem::path> fixtures_path;  // Mock only

  void validate() const {
    if (timeout.count() <= 0) throw ValidationError("backend timeout must be > 0");
    if (max_retries < 0) throw ValidationError("backend retries must be >= 0");
    if (max_concurrency < 1) throw ValidationError("backend concurrency must be >= 1");
    if (kind == BackendKind::Http && base_url.empty()) {
      throw ValidationError("http backend requires a base URL");
    }
  }
};

inline std::optional<std::string> check_sentiment(const std::vector<double>& probs) {
  if (probs.size() != kSentimentClasses) {
    return "sentiment vector has " + std::to_string(probs.size()) + " entries, expected 6";
  }
  return check_probability_vector(probs);
}

inline std::optional<std::string> check_embeddings(const std::vector<Embedding>& vectors,
                                                   std::size_t expected_count) {
  if (vectors.size() != expected_count) return "embedding count != sentence count";
  if (vectors.empty()) return std::nullopt;
  std::size_t dim = vectors.front().size();
  if (dim == 0) return "embedding dimension is zero";
  for (const auto& v : vectors) {
    if (v.size() != dim) return "embedding dimensions differ within one batch";
    for (double x : v) {
      if (!std::isfinite(x)) return "embedding contains a non-finite value";
    }
  }
  return std::nullopt;
}

}  // namespace opinionforge
