#pragma once

// JSON bodies of the version "1" inference protocol. Parsers validate the
// schema and raise ProtocolError on any violation.

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "backend.hpp"
#include "error.hpp"

namespace opinionforge::wire {

using nlohmann::json;

namespace detail {

inline const json& field(const json& body, const char* name) {
  if (!body.is_object()) throw ProtocolError("response body is not a JSON object");
  auto it = body.find(name);
  if (it == body.end()) throw ProtocolError(std::string("missing field '") + name + "'");
  return *it;
}

inline std::vector<double> number_array(const json& value, const char* name) {
  if (!value.is_array()) throw ProtocolError(std::string("'") + name + "' must be an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number()) throw ProtocolError(std::string("'") + name + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

// Requests.

inline json qa_request(std::string_view question, std::string_view context) {
  return {{"question", question}, {"context", context}};
}
inline json summarize_request(std::string_view text, int max_tokens) {
  return {{"text", text}, {"max_tokens", max_tokens}};
}
inline json embed_request(const std::vector<std::string>& sentences) {
  return {{"sentences", sentences}};
}
inline json sentiment_request(std::string_view text) { return {{"text", text}}; }

// Responses, server side.

inline json qa_response(const QaResult& qa) {
  json offsets = json::array();
  for (const auto& off : qa.tokenization.char_offsets) {
    offsets.push_back(off ? json::array({off->first, off->second}) : json(nullptr));
  }
  return {{"tokens", qa.tokenization.tokens},
          {"sep_index", qa.tokenization.sep_index},
          {"start_probs", qa.distribution.start_probs},
          {"end_probs", qa.distribution.end_probs},
          {"offsets", std::move(offsets)}};
}
inline json summarize_response(std::string_view summary) { return {{"summary", summary}}; }
inline json embed_response(const std::vector<Embedding>& vectors) {
  return {{"vectors", vectors}, {"dim", vectors.empty() ? 0 : vectors.front().size()}};
}
inline json sentiment_response(const SentimentProbs& probs) { return {{"probs", probs}}; }
inline json health_response() { return {{"status", "ok"}, {"protocol", kProtocolVersion}}; }

// Responses, client side.

inline QaResult parse_qa_response(const json& body) {
  QaResult out;
  const json& tokens = detail::field(body, "tokens");
  if (!tokens.is_array()) throw ProtocolError("'tokens' must be an array");
  for (const auto& t : tokens) {
    if (!t.is_string()) throw ProtocolError("'tokens' must hold strings");
    out.tokenization.tokens.push_back(t.get<std::string>());
  }
  const json& sep = detail::field(body, "sep_index");
  if (!sep.is_number_integer() || sep.get<long long>() < 0) {
    throw ProtocolError("'sep_index' must be a non-negative integer");
  }
  out.tokenization.sep_index = sep.get<std::size_t>();
  out.distribution.start_probs = detail::number_array(detail::field(body, "start_probs"), "start_probs");
  out.distribution.end_probs = detail::number_array(detail::field(body, "end_probs"), "end_probs");
  const json& offsets = detail::field(body, "offsets");
  if (!offsets.is_array()) throw ProtocolError("'offsets' must be an array");
  for (const auto& off : offsets) {
    if (off.is_null()) {
      out.tokenization.char_offsets.emplace_back(std::nullopt);
    } else if (off.is_array() && off.size() == 2 && off[0].is_number_unsigned() &&
               off[1].is_number_unsigned()) {
      out.tokenization.char_offsets.emplace_back(
          std::pair{off[0].get<std::size_t>(), off[1].get<std::size_t>()});
    } else {
      throw ProtocolError("'offsets' entries must be [start, end] or null");
    }
  }
  if (auto err = check_qa_result(out)) throw ProtocolError("qa response: " + *err);
  return out;
}

inline std::string parse_summarize_response(const json& body) {
  const json& summary = detail::field(body, "summary");
  if (!summary.is_string()) throw ProtocolError("'summary' must be a string");
  return summary.get<std::string>();
}

inline std::vector<Embedding> parse_embed_response(const json& body, std::size_t expected_count) {
  const json& vectors = detail::field(body, "vectors");
  if (!vectors.is_array()) throw ProtocolError("'vectors' must be an array");
  std::vector<Embedding> out;
  for (const auto& v : vectors) out.push_back(detail::number_array(v, "vectors"));
  const json& dim = detail::field(body, "dim");
  if (!dim.is_number_integer()) throw ProtocolError("'dim' must be an integer");
  if (auto err = check_embeddings(out, expected_count)) throw ProtocolError("embed response: " + *err);
  if (!out.empty() && out.front().size() != dim.get<std::size_t>()) {
    throw ProtocolError("'dim' disagrees with vector length");
  }
  return out;
}

inline SentimentProbs parse_sentiment_response(const json& body) {
  auto probs = detail::number_array(detail::field(body, "probs"), "probs");
  if (auto err = check_sentiment(probs)) throw ProtocolError("sentiment response: " + *err);
  SentimentProbs out{};
  std::copy(probs.begin(), probs.end(), out.begin());
  return out;
}

inline bool is_healthy_response(const json& body) {
  return body.is_object() && body.value("status", "") == "ok" &&
         body.value("protocol", "") == kProtocolVersion;
}

}  // namespace opinionforge::wire
