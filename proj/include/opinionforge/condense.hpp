#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "backend.hpp"
#include "cluster.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "mrc.hpp"
#include "text.hpp"

namespace opinionforge {

enum class GroupKind { AllReviews, Rating, Aspect };

struct GroupKey {
  GroupKind kind = GroupKind::AllReviews;
  int rating = 0;          // Rating only
  std::string aspect_key;  // Aspect only

  static GroupKey all() { return {GroupKind::AllReviews, 0, {}}; }
  static GroupKey for_rating(int r) { return {GroupKind::Rating, r, {}}; }
  static GroupKey for_aspect(std::string key) { return {GroupKind::Aspect, 0, std::move(key)}; }

  std::string name() const {
    switch (kind) {
      case GroupKind::AllReviews:
        return "all_reviews";
      case GroupKind::Rating:
        return "rating" + std::to_string(rating);
      case GroupKind::Aspect:
        return "aspect_" + aspect_key;
    }
    return {};
  }

  static std::optional<GroupKey> parse(std::string_view name) {
    if (name == "all_reviews") return all();
    if (name.size() == 7 && name.starts_with("rating") && name[6] >= '1' && name[6] <= '5') {
      return for_rating(name[6] - '0');
    }
    if (name.starts_with("aspect_") && name.size() > 7) {
      return for_aspect(std::string(name.substr(7)));
    }
    return std::nullopt;
  }

  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

/// Texts to summarize for one bucket, plus the reviews they came from.
struct SummaryGroup {
  SummaryGroup() = default;
  explicit SummaryGroup(GroupKey k) : key(std::move(k)) {}

  GroupKey key;
  std::vector<std::string> sources;
  // Distinct source reviews, aligned with each other.
  std::vector<std::string> review_ids;
  std::vector<std::string> review_texts;
  std::vector<int> member_ratings;

  std::vector<std::string> chunk_summaries;
  std::string summary;
};

enum class GroupMode { AllReviews, Rating, Aspect };

struct GroupingOptions {
  // Rating/AllReviews groups summarize extracted opinions instead of reviews.
  bool use_opinions = false;
  // Aspect group order; empty means order of first appearance in the spans.
  std::vector<std::string> aspect_order;
};

namespace detail {

inline void add_member(SummaryGroup& group, std::unordered_set<std::string>& seen,
                       const Review& review) {
  if (!seen.insert(review.id).second) return;
  group.review_ids.push_back(review.id);
  group.review_texts.push_back(review.text);
  group.member_ratings.push_back(review.rating);
}

}  // namespace detail

/// Buckets reviews or opinion spans. Empty buckets are dropped.
inline std::vector<SummaryGroup> group_reviews(const Corpus& corpus,
                                               const std::vector<OpinionSpan>& spans,
                                               GroupMode mode,
                                               const GroupingOptions& options = {}) {
  std::unordered_map<std::string, const Review*> by_id;
  for (const Review& r : corpus.reviews) by_id.emplace(r.id, &r);

  auto fill_from_reviews = [&](SummaryGroup& group, auto&& accept) {
    std::unordered_set<std::string> seen;
    if (options.use_opinions) {
      for (const OpinionSpan& span : spans) {
        auto it = by_id.find(span.review_id);
        if (it == by_id.end() || !accept(*it->second)) continue;
        group.sources.push_back(span.text);
        detail::add_member(group, seen, *it->second);
      }
    } else {
      for (const Review& r : corpus.reviews) {
        if (!accept(r)) continue;
        group.sources.push_back(r.text);
        detail::add_member(group, seen, r);
      }
    }
  };

  std::vector<SummaryGroup> groups;
  switch (mode) {
    case GroupMode::AllReviews: {
      SummaryGroup g{GroupKey::all()};
      fill_from_reviews(g, [](const Review&) { return true; });
      if (!g.sources.empty()) groups.push_back(std::move(g));
      break;
    }
    case GroupMode::Rating:
      for (int rating = 1; rating <= 5; ++rating) {
        SummaryGroup g{GroupKey::for_rating(rating)};
        fill_from_reviews(g, [rating](const Review& r) { return r.rating == rating; });
        if (!g.sources.empty()) groups.push_back(std::move(g));
      }
      break;
    case GroupMode::Aspect: {
      std::vector<std::string> order = options.aspect_order;
      for (const OpinionSpan& span : spans) {
        if (std::find(order.begin(), order.end(), span.aspect_key) == order.end()) {
          order.push_back(span.aspect_key);
        }
      }
      for (const std::string& aspect : order) {
        SummaryGroup g{GroupKey::for_aspect(aspect)};
        std::unordered_set<std::string> seen;
        for (const OpinionSpan& span : spans) {
          if (span.aspect_key != aspect) continue;
          auto it = by_id.find(span.review_id);
          if (it == by_id.end()) continue;
          g.sources.push_back(span.text);
          detail::add_member(g, seen, *it->second);
        }
        if (!g.sources.empty()) groups.push_back(std::move(g));
      }
      break;
    }
  }
  return groups;
}

struct ChunkError {
  std::size_t chunk_index;
  std::string message;
};

struct ChunkedSummaries {
  std::vector<std::string> summaries;  // chunk order, failed chunks omitted
  std::vector<ChunkError> errors;
  std::size_t chunk_count = 0;
};

inline constexpr int kDefaultMaxGroupSize = 8;
inline constexpr int kDefaultSummaryTokens = 60;

/// Summarizes consecutive chunks of at most max_group_size sources, each
/// chunk joined by blank lines.
inline ChunkedSummaries chunked_summaries(const SummaryGroup& group, ModelBackend& backend,
                                          int max_group_size = kDefaultMaxGroupSize,
                                          int max_output_tokens = kDefaultSummaryTokens) {
  if (max_group_size < 1) throw ValidationError("max_group_size must be >= 1");
  if (group.sources.empty()) throw ValidationError("group " + group.key.name() + " has no sources");
  ChunkedSummaries out;
  const std::size_t chunk = static_cast<std::size_t>(max_group_size);
  for (std::size_t begin = 0; begin < group.sources.size(); begin += chunk) {
    std::size_t end = std::min(begin + chunk, group.sources.size());
    std::string text;
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) text += "\n\n";
      text += group.sources[i];
    }
    std::size_t index = out.chunk_count++;
    try {
      out.summaries.push_back(backend.summarize(text, max_output_tokens));
    } catch (const std::exception& e) {
      out.errors.push_back({index, e.what()});
    }
  }
  if (out.summaries.empty()) {
    throw CondenseError("every chunk of group " + group.key.name() +
                        " failed to summarize: " + out.errors.front().message);
  }
  return out;
}

inline constexpr double kDefaultClusterThreshold = 1.5;

struct Condensed {
  std::string text;
  std::vector<std::string> sentences;
  std::vector<SentenceCluster> clusters;
};

/// Splits all summaries into sentences, clusters their embeddings and keeps
/// the longest sentence of each cluster (lowest index on ties), in order of
/// each cluster's first sentence.
inline Condensed condense_detailed(const std::vector<std::string>& summaries,
                                   ModelBackend& backend,
                                   double threshold = kDefaultClusterThreshold,
                                   Linkage linkage = Linkage::Average) {
  if (summaries.empty()) throw ValidationError("nothing to condense");
  Condensed out;
  for (const auto& summary : summaries) {
    for (auto& s : split_sentences(summary)) out.sentences.push_back(std::move(s));
  }
  if (out.sentences.empty()) throw CondenseError("summaries contain no sentences");

  std::vector<Embedding> vectors;
  try {
    vectors = backend.embed(out.sentences);
  } catch (const std::exception& e) {
    throw CondenseError(std::string("sentence embedding failed: ") + e.what());
  }
  if (auto err = check_embeddings(vectors, out.sentences.size())) {
    throw CondenseError("sentence embedding failed: " + *err);
  }

  out.clusters = agglomerative_cluster(vectors, threshold, linkage);
  for (auto& cluster : out.clusters) {
    std::size_t best = cluster.member_indices.front();
    for (std::size_t idx : cluster.member_indices) {
      if (out.sentences[idx].size() > out.sentences[best].size()) best = idx;
    }
    cluster.representative_index = best;
    if (!out.text.empty()) out.text.push_back(' ');
    out.text += out.sentences[best];
  }
  return out;
}

inline std::string condense_summaries(const std::vector<std::string>& summaries,
                                      ModelBackend& backend,
                                      double threshold = kDefaultClusterThreshold,
                                      Linkage linkage = Linkage::Average) {
  return condense_detailed(summaries, backend, threshold, linkage).text;
}

/// Keeps whole sentences, in order, while the running whitespace-token count
/// stays within `budget`. Sentences of one source are joined by spaces and
/// sources by blank lines. If not even the first sentence fits, it is cut to
/// `budget` tokens.
inline std::string truncate_to_token_budget(const std::vector<std::string>& sources,
                                            std::size_t budget) {
  if (budget == 0) throw ValidationError("token budget must be >= 1");
  std::string out;
  std::size_t used = 0;
  bool any = false;
  for (const auto& source : sources) {
    bool source_started = false;
    for (const auto& sentence : split_sentences(source)) {
      auto spans = whitespace_token_spans(sentence);
      if (used + spans.size() > budget) {
        if (!any) out = sentence.substr(0, spans[budget - 1].end);
        return out;
      }
      if (source_started) {
        out.push_back(' ');
      } else if (any) {
        out += "\n\n";
      }
      out += sentence;
      used += spans.size();
      any = true;
      source_started = true;
    }
  }
  return out;
}

inline constexpr int kMinSingleShotInputTokens = 64;
inline constexpr int kDefaultSingleShotInputTokens = 512;

/// Joins all sources into one document, truncated at a sentence boundary, and
/// summarizes it with one call.
inline std::string single_shot_summary(const SummaryGroup& group, ModelBackend& backend,
                                       int max_input_tokens = kDefaultSingleShotInputTokens,
                                       int max_output_tokens = kDefaultSummaryTokens) {
  if (max_input_tokens < kMinSingleShotInputTokens) {
    throw ValidationError("max_input_tokens must be >= 64");
  }
  if (group.sources.empty()) throw ValidationError("group " + group.key.name() + " has no sources");
  std::string document =
      truncate_to_token_budget(group.sources, static_cast<std::size_t>(max_input_tokens));
  try {
    return backend.summarize(document, max_output_tokens);
  } catch (const std::exception& e) {
    throw CondenseError("single-shot summarization of " + group.key.name() + " failed: " + e.what());
  }
}

inline nlohmann::ordered_json to_json(const SummaryGroup& group) {
  nlohmann::ordered_json j;
  j["group_key"] = group.key.name();
  j["sources_count"] = group.sources.size();
  j["summary"] = group.summary;
  j["chunk_summaries"] = group.chunk_summaries;
  j["review_ids"] = group.review_ids;
  return j;
}

}  // namespace opinionforge
