#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace opinionforge {

using CharOffset = std::optional<std::pair<std::size_t, std::size_t>>;

/// Packed sequence [CLS] question [SEP] context [SEP] as produced by a backend.
struct QaTokenization {
  std::vector<std::string> tokens;
  std::size_t sep_index = 0;  // first separator
  std::vector<CharOffset> char_offsets;  // null for question and special tokens
};

/// Softmax-normalized start and end pointer distributions over token positions.
struct SpanDistribution {
  std::vector<double> start_probs;
  std::vector<double> end_probs;
};

struct QaResult {
  QaTokenization tokenization;
  SpanDistribution distribution;
};

struct SpanIndices {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const SpanIndices&, const SpanIndices&) = default;
};

enum class SpanRule {
  AllowSingleToken,    // start <= end
  StrictlyIncreasing,  // start < end
};

enum class Decoder { Sequential, Joint };

inline constexpr double kProbabilitySumTolerance = 1e-6;

/// Returns a description of the first violated invariant, if any.
inline std::optional<std::string> check_probability_vector(const std::vector<double>& probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) return "probability entries must be finite and >= 0";
    sum += p;
  }
  if (std::fabs(sum - 1.0) > kProbabilitySumTolerance) {
    return "probabilities sum to " + std::to_string(sum) + ", expected 1";
  }
  return std::nullopt;
}

inline std::optional<std::string> check_distribution(const SpanDistribution& dist) {
  if (dist.start_probs.size() != dist.end_probs.size()) {
    return "start and end distributions differ in length";
  }
  if (dist.start_probs.empty()) return "empty distribution";
  if (auto err = check_probability_vector(dist.start_probs)) return "start: " + *err;
  if (auto err = check_probability_vector(dist.end_probs)) return "end: " + *err;
  return std::nullopt;
}

inline std::optional<std::string> check_qa_result(const QaResult& qa) {
  const auto& tok = qa.tokenization;
  std::size_t n = tok.tokens.size();
  if (auto err = check_distribution(qa.distribution)) return err;
  if (qa.distribution.start_probs.size() != n) return "probability length != token count";
  if (tok.char_offsets.size() != n) return "offset count != token count";
  if (tok.sep_index == 0 || tok.sep_index + 1 >= n) return "sep_index out of range";
  std::size_t last_end = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& off = tok.char_offsets[i];
    if (!off) continue;
    if (i <= tok.sep_index) return "question tokens must carry null offsets";
    if (off->first > off->second) return "offset start after end";
    if (off->first < last_end) return "offsets overlap or go backwards";
    last_end = off->second;
  }
  return std::nullopt;
}

namespace detail {

inline void require_decodable(const SpanDistribution& dist, std::size_t sep_index,
                              SpanRule rule) {
  if (auto err = check_distribution(dist)) throw ValidationError(*err);
  std::size_t n = dist.start_probs.size();
  std::size_t needed = rule == SpanRule::StrictlyIncreasing ? 2 : 1;
  if (n <= sep_index + needed) {
    throw DecodeError("no admissible answer position after separator index " +
                      std::to_string(sep_index));
  }
}

// Lowest index of the maximum over [first, last].
inline std::size_t argmax_range(const std::vector<double>& v, std::size_t first, std::size_t last) {
  std::size_t best = first;
  for (std::size_t i = first + 1; i <= last; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace detail

/// End pointer first: end = argmax of end_probs after the separator, then
/// start = argmax of start_probs over (sep_index, end]. Ties go to the lowest
/// index. Under StrictlyIncreasing the end needs room for a start before it.
inline SpanIndices decode_span_sequential(const SpanDistribution& dist, std::size_t sep_index,
                                          SpanRule rule = SpanRule::AllowSingleToken) {
  detail::require_decodable(dist, sep_index, rule);
  std::size_t n = dist.start_probs.size();
  bool strict = rule == SpanRule::StrictlyIncreasing;
  std::size_t end = detail::argmax_range(dist.end_probs, sep_index + (strict ? 2 : 1), n - 1);
  std::size_t start = detail::argmax_range(dist.start_probs, sep_index + 1, strict ? end - 1 : end);
  return {start, end};
}

/// Admissible pair maximizing start_probs[s] * end_probs[e]; ties go to the
/// smallest start, then the smallest end.
inline SpanIndices decode_span_joint(const SpanDistribution& dist, std::size_t sep_index,
                                     SpanRule rule = SpanRule::AllowSingleToken) {
  detail::require_decodable(dist, sep_index, rule);
  std::size_t n = dist.start_probs.size();
  bool strict = rule == SpanRule::StrictlyIncreasing;
  std::size_t first_start = sep_index + 1;
  std::size_t best_prefix = first_start;  // lowest argmax of start over admissible starts
  SpanIndices best{first_start, first_start + (strict ? 1 : 0)};
  double best_score = -1.0;
  for (std::size_t e = first_start + (strict ? 1 : 0); e < n; ++e) {
    std::size_t last_start = strict ? e - 1 : e;
    if (dist.start_probs[last_start] > dist.start_probs[best_prefix]) best_prefix = last_start;
    // With a zero end probability every start scores 0; the smallest wins.
    std::size_t s = dist.end_probs[e] > 0.0 ? best_prefix : first_start;
    double score = dist.start_probs[s] * dist.end_probs[e];
    if (score > best_score || (score == best_score && s < best.start)) {
      best_score = score;
      best = {s, e};
    }
  }
  return best;
}

inline SpanIndices decode_span(Decoder decoder, const SpanDistribution& dist,
                               std::size_t sep_index, SpanRule rule) {
  return decoder == Decoder::Joint ? decode_span_joint(dist, sep_index, rule)
                                   : decode_span_sequential(dist, sep_index, rule);
}

inline constexpr double kLossProbabilityFloor = 1e-12;

/// Mean cross entropy of the two pointers against one-hot gold positions.
inline double span_loss(const SpanDistribution& dist, std::size_t gold_start,
                        std::size_t gold_end) {
  if (dist.start_probs.size() != dist.end_probs.size()) {
    throw ValidationError("start and end distributions differ in length");
  }
  if (gold_start >= dist.start_probs.size() || gold_end >= dist.end_probs.size()) {
    throw ValidationError("gold index out of bounds");
  }
  double ls = std::log(std::max(dist.start_probs[gold_start], kLossProbabilityFloor));
  double le = std::log(std::max(dist.end_probs[gold_end], kLossProbabilityFloor));
  return (0.0 - ls - le) / 2.0 + 0.0;
}

}  // namespace opinionforge
