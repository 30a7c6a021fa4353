#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "backend.hpp"
#include "hash.hpp"
#include "text.hpp"

namespace opinionforge {

/// Hermetic, deterministic stand-in for every neural capability. All outputs
/// are pure functions of (seed, fixtures, inputs).
class MockBackend final : public ModelBackend {
 public:
  static constexpr std::size_t kEmbeddingDim = 16;
  static constexpr double kPeakMass = 0.9;

  explicit MockBackend(std::uint64_t seed = 0) : seed_(seed) {}

  MockBackend(std::uint64_t seed, const std::filesystem::path& fixtures_path) : seed_(seed) {
    load_fixtures(fixtures_path);
  }

  /// Canned answers: questions paired with contexts map to an answer substring.
  void add_fixture(std::string question, std::string context, std::string answer) {
    fixtures_[{std::move(question), std::move(context)}] = std::move(answer);
  }

  void load_fixtures(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock fixtures: " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
      throw ValidationError("mock fixtures must be a JSON array: " + path.string());
    }
    for (const auto& entry : doc) {
      if (!entry.is_object() || !entry.contains("question") || !entry.contains("context") ||
          !entry.contains("answer")) {
        throw ValidationError("mock fixture entries need question, context and answer");
      }
      add_fixture(entry["question"].get<std::string>(), entry["context"].get<std::string>(),
                  entry["answer"].get<std::string>());
    }
  }

  QaResult qa(std::string_view question, std::string_view context) override {
    if (collapse_whitespace(context).empty()) throw ValidationError("mock qa needs a non-empty context");
    QaResult out;
    auto& tok = out.tokenization;
    tok.tokens.push_back("[CLS]");
    tok.char_offsets.emplace_back(std::nullopt);
    for (const auto& span : whitespace_token_spans(question)) {
      tok.tokens.emplace_back(question.substr(span.begin, span.end - span.begin));
      tok.char_offsets.emplace_back(std::nullopt);
    }
    tok.sep_index = tok.tokens.size();
    tok.tokens.push_back("[SEP]");
    tok.char_offsets.emplace_back(std::nullopt);
    std::size_t first_context = tok.tokens.size();
    auto context_spans = whitespace_token_spans(context);
    for (const auto& span : context_spans) {
      tok.tokens.emplace_back(context.substr(span.begin, span.end - span.begin));
      tok.char_offsets.emplace_back(std::pair{span.begin, span.end});
    }
    tok.tokens.push_back("[SEP]");
    tok.char_offsets.emplace_back(std::nullopt);

    std::size_t n = tok.tokens.size();
    auto fixture = fixtures_.find({std::string(question), std::string(context)});
    if (fixture != fixtures_.end()) {
      if (auto span = locate_answer(context, context_spans, fixture->second)) {
        out.distribution.start_probs = peaked(n, first_context + span->start);
        out.distribution.end_probs = peaked(n, first_context + span->end);
        return out;
      }
    }

    Fnv1a h;
    h.add(seed_).separator().add(question).separator().add(context);
    SplitMix64 rng(h.value());
    out.distribution.start_probs = random_softmax(n, rng);
    out.distribution.end_probs = random_softmax(n, rng);
    return out;
  }

  /// First sentence of each blank-line-separated paragraph, truncated to
  /// max_output_tokens whitespace tokens.
  std::string summarize(std::string_view text, int max_output_tokens) override {
    if (max_output_tokens < 1) throw ValidationError("max_output_tokens must be >= 1");
    std::vector<std::string> firsts;
    for (const auto& paragraph : split_paragraphs(text)) {
      auto sentences = split_sentences(paragraph);
      if (!sentences.empty()) firsts.push_back(std::move(sentences.front()));
    }
    std::string joined;
    for (const auto& s : firsts) {
      if (!joined.empty()) joined.push_back(' ');
      joined += s;
    }
    auto spans = whitespace_token_spans(joined);
    if (spans.size() > static_cast<std::size_t>(max_output_tokens)) {
      joined.resize(spans[static_cast<std::size_t>(max_output_tokens) - 1].end);
    }
    return joined;
  }

  /// Signed feature hashing of lowercase word tokens into 16 dims, L2-normalized.
  /// Equal sentences get equal vectors; text without word tokens maps to zero.
  std::vector<Embedding> embed(const std::vector<std::string>& sentences) override {
    std::vector<Embedding> out;
    out.reserve(sentences.size());
    for (const auto& sentence : sentences) {
      Embedding v(kEmbeddingDim, 0.0);
      for (const auto& token : alnum_tokens(sentence)) {
        std::uint64_t hv = Fnv1a().add(token).value();
        double sign = ((hv >> 32) & 1U) != 0 ? -1.0 : 1.0;
        v[hv % kEmbeddingDim] += sign;
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
      }
      out.push_back(std::move(v));
    }
    return out;
  }

  /// Lexicon vote: class = clamp(round_half_up(2.5 + positives - negatives), 0, 5),
  /// returned as a 0.9-peaked distribution.
  SentimentProbs sentiment(std::string_view text) override {
    SentimentProbs probs{};
    std::size_t cls = sentiment_class(text);
    double rest = (1.0 - kPeakMass) / static_cast<double>(kSentimentClasses - 1);
    for (std::size_t i = 0; i < kSentimentClasses; ++i) probs[i] = i == cls ? kPeakMass : rest;
    return probs;
  }

  static std::size_t sentiment_class(std::string_view text) {
    long score = 0;
    for (const auto& token : alnum_tokens(text)) {
      if (positive_words().contains(token)) ++score;
      if (negative_words().contains(token)) --score;
    }
    double raw = std::floor(2.5 + static_cast<double>(score) + 0.5);
    return static_cast<std::size_t>(std::clamp(raw, 0.0, 5.0));
  }

  static const std::unordered_set<std::string>& positive_words() {
    static const std::unordered_set<std::string> kWords = {
        "good", "great", "excellent", "perfect", "love", "loved", "amazing", "awesome",
        "best", "nice", "fantastic", "wonderful", "happy", "recommend", "fast", "beautiful",
        "bright", "crisp", "solid", "reliable",
    };
    return kWords;
  }

  static const std::unordered_set<std::string>& negative_words() {
    static const std::unordered_set<std::string> kWords = {
        "bad", "broken", "awful", "terrible", "poor", "worst", "hate", "hated",
        "slow", "useless", "horrible", "defective", "disappointed", "disappointing", "waste", "returned",
        "dim", "crashes", "junk", "flimsy",
    };
    return kWords;
  }

  std::string describe() const override { return "mock(seed=" + std::to_string(seed_) + ")"; }

 private:
  static std::vector<std::string> split_paragraphs(std::string_view text) {
    std::vector<std::string> paragraphs;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
      std::size_t nl = text.find('\n', i);
      std::string_view line = text.substr(i, nl == std::string_view::npos ? std::string_view::npos : nl - i);
      if (collapse_whitespace(line).empty()) {
        if (!collapse_whitespace(current).empty()) paragraphs.push_back(current);
        current.clear();
      } else {
        if (!current.empty()) current.push_back('\n');
        current += line;
      }
      if (nl == std::string_view::npos) break;
      i = nl + 1;
    }
    if (!collapse_whitespace(current).empty()) paragraphs.push_back(current);
    return paragraphs;
  }

  static std::optional<SpanIndices> locate_answer(std::string_view context,
                                                  const std::vector<TokenSpan>& spans,
                                                  std::string_view answer) {
    if (answer.empty()) return std::nullopt;
    std::size_t pos = context.find(answer);
    if (pos == std::string_view::npos) return std::nullopt;
    std::size_t stop = pos + answer.size();
    std::optional<std::size_t> first;
    std::size_t last = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (spans[i].end > pos && spans[i].begin < stop) {
        if (!first) first = i;
        last = i;
      }
    }
    if (!first) return std::nullopt;
    return SpanIndices{*first, last};
  }

  static std::vector<double> peaked(std::size_t n, std::size_t at) {
    double rest = n > 1 ? (1.0 - kPeakMass) / static_cast<double>(n - 1) : 0.0;
    std::vector<double> p(n, rest);
    p[at] = n > 1 ? kPeakMass : 1.0;
    return p;
  }

  static std::vector<double> random_softmax(std::size_t n, SplitMix64& rng) {
    std::vector<double> logits(n);
    for (double& l : logits) l = 8.0 * rng.uniform() - 4.0;
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& l : logits) {
      l = std::exp(l - max_logit);
      sum += l;
    }
    for (double& l : logits) l /= sum;
    return logits;
  }

  std::uint64_t seed_;
  std::map<std::pair<std::string, std::string>, std::string> fixtures_;
};

}  // namespace opinionforge
