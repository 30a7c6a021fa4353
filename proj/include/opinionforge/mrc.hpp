#pragma once

#include <algorithm>
#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspects.hpp"
#include "backend.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "span.hpp"

namespace opinionforge {

/// One extracted answer: the review substring covering tokens [start, end].
struct OpinionSpan {
  std::string review_id;
  std::string aspect_key;
  QuestionVariant variant = QuestionVariant::HowIs;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;
  double confidence = 0.0;
};

struct ExtractionOptions {
  Decoder decoder = Decoder::Sequential;
  SpanRule rule = SpanRule::AllowSingleToken;
  double min_confidence = 0.0;
  int workers = 1;
};

struct PairError {
  std::string review_id;
  std::string question;
  std::string message;
};

struct ExtractionResult {
  std::vector<OpinionSpan> spans;
  std::vector<PairError> errors;
  std::size_t pairs = 0;
};

/// Maps a token span to the covered bytes of the context. Tokens without
/// offsets (special tokens) are skipped; returns "" if none remain.
inline std::string span_text(const QaTokenization& tok, SpanIndices span, std::string_view context) {
  std::optional<std::size_t> begin;
  std::size_t end = 0;
  for (std::size_t i = span.start; i <= span.end && i < tok.char_offsets.size(); ++i) {
    const auto& off = tok.char_offsets[i];
    if (!off) continue;
    if (off->second > context.size()) throw ProtocolError("token offset beyond context length");
    if (!begin) begin = off->first;
    end = off->second;
  }
  if (!begin || end <= *begin) return {};
  return std::string(context.substr(*begin, end - *begin));
}

namespace detail {

struct PairOutcome {
  std::optional<OpinionSpan> span;
  std::optional<std::string> error;
};

inline PairOutcome extract_pair(const Review& review, const AspectQuery& query,
                                ModelBackend& backend, const ExtractionOptions& options) {
  PairOutcome out;
  try {
    QaResult qa = backend.qa(query.question, review.text);
    if (auto err = check_qa_result(qa)) throw ProtocolError(*err);
    SpanIndices idx = decode_span(options.decoder, qa.distribution, qa.tokenization.sep_index,
                                  options.rule);
    double confidence = qa.distribution.start_probs[idx.start] * qa.distribution.end_probs[idx.end];
    std::string text = span_text(qa.tokenization, idx, review.text);
    if (text.empty() || confidence < options.min_confidence) return out;
    out.span = OpinionSpan{review.id, query.aspect.key, query.variant, idx.start, idx.end,
                           std::move(text), confidence};
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

/// Asks every query of every review. Failed pairs are recorded and skipped;
/// more than half failing raises PipelineError. Output is ordered by review,
/// then query, regardless of how requests are scheduled.
inline ExtractionResult extract_opinions(const Corpus& corpus,
                                         const std::vector<AspectQuery>& queries,
                                         ModelBackend& backend,
                                         const ExtractionOptions& options = {}) {
  if (options.min_confidence < 0.0) throw ValidationError("min_confidence must be >= 0");
  const std::size_t pairs = corpus.reviews.size() * queries.size();
  std::vector<detail::PairOutcome> outcomes(pairs);

  auto work = [&](std::size_t i) {
    outcomes[i] = detail::extract_pair(corpus.reviews[i / queries.size()],
                                       queries[i % queries.size()], backend, options);
  };
  std::size_t workers = static_cast<std::size_t>(std::max(1, options.workers));
  if (workers == 1 || pairs < 2) {
    for (std::size_t i = 0; i < pairs; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, pairs); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < pairs; i = next++) work(i);
      });
    }
  }

  ExtractionResult result;
  result.pairs = pairs;
  for (std::size_t i = 0; i < pairs; ++i) {
    auto& outcome = outcomes[i];
    if (outcome.span) result.spans.push_back(std::move(*outcome.span));
    if (outcome.error) {
      result.errors.push_back({corpus.reviews[i / queries.size()].id,
                               queries[i % queries.size()].question, std::move(*outcome.error)});
    }
  }
  if (pairs > 0 && result.errors.size() * 2 > pairs) {
    throw PipelineError("opinion extraction failed for " + std::to_string(result.errors.size()) +
                        " of " + std::to_string(pairs) + " review/question pairs; first error: " +
                        result.errors.front().message);
  }
  return result;
}

inline nlohmann::ordered_json to_json(const OpinionSpan& span) {
  nlohmann::ordered_json j;
  j["review_id"] = span.review_id;
  j["aspect"] = span.aspect_key;
  j["variant"] = variant_name(span.variant);
  j["start"] = span.start;
  j["end"] = span.end;
  j["text"] = span.text;
  j["confidence"] = span.confidence;
  return j;
}

}  // namespace opinionforge
