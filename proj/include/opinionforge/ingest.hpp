#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "hash.hpp"
#include "text.hpp"

namespace opinionforge {

struct RawRecord {
  std::size_t source_line = 1;  // 1-based
  std::string payload;
};

struct Review {
  std::string id;
  std::string product_id;
  int rating = 0;
  std::string text;
  std::vector<std::string> tokens;
};

/// id is a pure function of (product_id, text, rating).
inline std::string review_id(std::string_view product_id, std::string_view text, int rating) {
  Fnv1a h;
  h.add(product_id).separator().add(text).separator().add(static_cast<std::uint64_t>(rating));
  return to_hex(h.value());
}

/// Builds a Review from already-cleaned text, or nullopt if it has no word tokens.
inline std::optional<Review> make_review(std::string product_id, std::string text, int rating) {
  auto tokens = alnum_tokens(text);
  if (tokens.empty()) return std::nullopt;
  Review r;
  r.id = review_id(product_id, text, rating);
  r.product_id = std::move(product_id);
  r.rating = rating;
  r.text = std::move(text);
  r.tokens = std::move(tokens);
  return r;
}

struct Corpus {
  std::vector<Review> reviews;
  std::string product_id;
  std::size_t lines_read = 0;
  std::size_t dropped_malformed = 0;
  std::size_t dropped_duplicates = 0;
  // Well-formed records for a product other than the selected one.
  std::size_t dropped_other_product = 0;
};

struct IngestOptions {
  std::string text_field = "reviewText";
  std::string rating_field = "overall";
  std::string product_field = "asin";
  // Empty: the product of the first well-formed record is selected.
  std::string product_filter;
};

/// Keeps the first occurrence of every (text, rating) pair, preserving order.
inline std::vector<Review> dedup(std::vector<Review> reviews) {
  std::set<std::pair<std::string, int>> seen;
  std::vector<Review> kept;
  kept.reserve(reviews.size());
  for (Review& r : reviews) {
    if (seen.emplace(r.text, r.rating).second) kept.push_back(std::move(r));
  }
  return kept;
}

namespace detail {

// Parses one JSON object, rejecting duplicate keys at any nesting depth.
inline std::optional<nlohmann::json> parse_strict_object(const std::string& payload) {
  std::vector<std::set<std::string>> key_stack;
  bool duplicate = false;
  nlohmann::json::parser_callback_t callback =
      [&](int /*depth*/, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
        using Event = nlohmann::json::parse_event_t;
        switch (event) {
          case Event::object_start:
            key_stack.emplace_back();
            break;
          case Event::object_end:
            if (!key_stack.empty()) key_stack.pop_back();
            break;
          case Event::key:
            if (!key_stack.empty() && !key_stack.back().insert(parsed.get<std::string>()).second) {
              duplicate = true;
            }
            break;
          default:
            break;
        }
        return true;
      };
  nlohmann::json doc = nlohmann::json::parse(payload, callback, /*allow_exceptions=*/false);
  if (doc.is_discarded() || duplicate || !doc.is_object()) return std::nullopt;
  return doc;
}

struct ParsedRecord {
  std::string product_id;
  std::string text;
  int rating;
};

inline std::optional<ParsedRecord> interpret_record(const RawRecord& raw,
                                                    const IngestOptions& options) {
  if (raw.payload.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  auto doc = parse_strict_object(raw.payload);
  if (!doc) return std::nullopt;

  auto text_it = doc->find(options.text_field);
  auto rating_it = doc->find(options.rating_field);
  auto product_it = doc->find(options.product_field);
  if (text_it == doc->end() || rating_it == doc->end() || product_it == doc->end()) {
    return std::nullopt;
  }
  if (!text_it->is_string() || !product_it->is_string() || !rating_it->is_number()) {
    return std::nullopt;
  }
  double rating_value = rating_it->get<double>();
  if (!std::isfinite(rating_value)) return std::nullopt;
  double truncated = std::trunc(rating_value);
  if (truncated < 1.0 || truncated > 5.0) return std::nullopt;

  std::string product = product_it->get<std::string>();
  if (product.empty()) return std::nullopt;
  return ParsedRecord{std::move(product), clean_text(text_it->get<std::string>()),
                      static_cast<int>(truncated)};
}

}  // namespace detail

/// Reads line-delimited JSON reviews. Malformed lines (bad JSON, duplicate keys,
/// missing or mistyped fields, rating outside [1,5], no word tokens after
/// cleaning) are counted and skipped. Survivors are cleaned and deduplicated
/// in file order. Throws EmptyCorpus if nothing survives.
inline Corpus parse_reviews(std::istream& input, const IngestOptions& options = {}) {
  Corpus corpus;
  corpus.product_id = options.product_filter;
  std::vector<Review> accepted;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    RawRecord raw{line_no, line};
    auto parsed = detail::interpret_record(raw, options);
    if (!parsed) {
      ++corpus.dropped_malformed;
      continue;
    }
    auto review = make_review(parsed->product_id, std::move(parsed->text), parsed->rating);
    if (!review) {
      ++corpus.dropped_malformed;
      continue;
    }
    if (corpus.product_id.empty()) corpus.product_id = review->product_id;
    if (review->product_id != corpus.product_id) {
      ++corpus.dropped_other_product;
      continue;
    }
    accepted.push_back(std::move(*review));
  }
  if (input.bad()) throw IoError("failed while reading review input");
  corpus.lines_read = line_no;

  std::size_t before = accepted.size();
  corpus.reviews = dedup(std::move(accepted));
  corpus.dropped_duplicates = before - corpus.reviews.size();
  if (corpus.reviews.empty()) {
    throw EmptyCorpus("no reviews survived ingestion (" + std::to_string(line_no) + " lines read)");
  }
  return corpus;
}

inline Corpus parse_reviews_file(const std::filesystem::path& path,
                                 const IngestOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open review input: " + path.string());
  return parse_reviews(in, options);
}

/// Re-derives texts under the given options; reviews whose text becomes empty
/// are dropped and the rest are deduplicated again.
inline Corpus apply_preprocessing(const Corpus& corpus, const PreprocessOptions& options) {
  if (!options.any()) return corpus;
  Corpus out = corpus;
  out.reviews.clear();
  for (const Review& r : corpus.reviews) {
    auto review = make_review(r.product_id, preprocess(r.text, options), r.rating);
    if (review) out.reviews.push_back(std::move(*review));
  }
  out.reviews = dedup(std::move(out.reviews));
  if (out.reviews.empty()) throw EmptyCorpus("preprocessing removed every review");
  return out;
}

inline void write_corpus_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const Review& r : corpus.reviews) {
    nlohmann::ordered_json row;
    row["id"] = r.id;
    row["product_id"] = r.product_id;
    row["rating"] = r.rating;
    row["text"] = r.text;
    out << row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
}

}  // namespace opinionforge
