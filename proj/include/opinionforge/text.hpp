#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "porter_stemmer.hpp"

namespace opinionforge {

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
inline char to_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

// Length of an HTML-ish tag starting at text[pos], or 0 if none starts there.
// Accepts <name ...>, </name>, <name/> and <!...> (comments, doctype).
inline std::size_t tag_length(std::string_view text, std::size_t pos) {
  if (text[pos] != '<' || pos + 1 >= text.size()) return 0;
  std::size_t i = pos + 1;
  if (text[i] == '/') {
    ++i;
    if (i >= text.size() || !is_alpha(text[i])) return 0;
  } else if (text[i] == '!') {
    ++i;
  } else if (!is_alpha(text[i])) {
    return 0;
  }
  for (; i < text.size(); ++i) {
    if (text[i] == '<') return 0;
    if (text[i] == '>') return i - pos + 1;
  }
  return 0;
}

inline std::string remove_tags_once(std::string_view text, bool* changed) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = tag_length(text, i);
    if (len > 0) {
      out.push_back(' ');
      i += len;
      *changed = true;
    } else {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace detail

inline std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (detail::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

/// Strips HTML tags (each replaced by a space), collapses whitespace runs and
/// trims. Tag removal repeats until no tag remains, so the result is a fixed
/// point and the output is never longer than the input.
inline std::string clean_text(std::string_view raw) {
  std::string text(raw);
  for (bool changed = true; changed;) {
    changed = false;
    text = detail::remove_tags_once(text, &changed);
  }
  return collapse_whitespace(text);
}

/// Lowercased maximal runs of ASCII letters and digits.
inline std::vector<std::string> alnum_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (detail::is_alnum(c)) {
      current.push_back(detail::to_lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct TokenSpan {
  std::size_t begin;
  std::size_t end;  // one past the last byte
};

inline std::vector<TokenSpan> whitespace_token_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t start = i;
    while (i < text.size() && !detail::is_space(text[i])) ++i;
    spans.push_back({start, i});
  }
  return spans;
}

inline std::size_t count_whitespace_tokens(std::string_view text) {
  return whitespace_token_spans(text).size();
}

inline const std::unordered_set<std::string>& sentence_abbreviations() {
  static const std::unordered_set<std::string> kAbbreviations = {
      "mr.", "mrs.", "ms.", "dr.", "e.g.", "i.e.", "vs.",
  };
  return kAbbreviations;
}

/// Splits after '.', '!' or '?' when followed by whitespace or end of text.
/// Known abbreviations never end a sentence. Fragments are trimmed and empty
/// ones dropped, so joining the result with single spaces reproduces the
/// whitespace-collapsed input.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  auto emit = [&](std::string_view piece) {
    std::string trimmed = collapse_whitespace(piece);
    if (!trimmed.empty()) sentences.push_back(std::move(trimmed));
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    bool boundary = i + 1 == text.size() || detail::is_space(text[i + 1]);
    if (!boundary) continue;
    if (c == '.') {
      std::size_t word_start = i;
      while (word_start > start && !detail::is_space(text[word_start - 1])) --word_start;
      std::string word;
      for (std::size_t k = word_start; k <= i; ++k) word.push_back(detail::to_lower(text[k]));
      if (sentence_abbreviations().contains(word)) continue;
    }
    emit(text.substr(start, i + 1 - start));
    start = i + 1;
  }
  if (start < text.size()) emit(text.substr(start));
  return sentences;
}

/// Fixed English function-word list.
inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kStopwords = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
      "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
      "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
      "down", "during", "each", "few", "for", "from", "further", "had", "has", "have",
      "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
      "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me",
      "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off",
      "on", "once", "only", "or", "other", "ought", "our", "ours", "ourselves", "out",
      "over", "own", "same", "she", "should", "so", "some", "such", "than", "that",
      "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "to", "too", "under", "until", "up", "very", "was", "we",
      "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
      "with", "would", "you", "your", "yours", "yourself", "yourselves", "also", "although", "am",
      "among", "anyone", "anything", "become", "cannot", "either", "else", "ever", "every", "get",
      "got", "however", "may", "might", "must", "neither", "often", "one", "per", "rather",
      "really", "shall", "since", "still", "thus", "upon", "us", "whether", "within", "yet",
  };
  return kStopwords;
}

struct PreprocessOptions {
  bool remove_stopwords = false;
  bool strip_symbols_numbers = false;
  bool stem = false;

  bool any() const { return remove_stopwords || strip_symbols_numbers || stem; }
};

/// Token-level normalization. With every flag off the input is returned
/// unchanged. Otherwise: whitespace tokens have non-letters stripped (if
/// requested), stopwords dropped (case-insensitively), and the remainder
/// lowercased and stemmed (if requested). The result may be empty.
inline std::string preprocess(std::string_view text, const PreprocessOptions& options) {
  if (!options.any()) return std::string(text);
  std::string out;
  for (const TokenSpan& span : whitespace_token_spans(text)) {
    std::string token(text.substr(span.begin, span.end - span.begin));
    if (options.strip_symbols_numbers) {
      std::erase_if(token, [](char c) { return !detail::is_alpha(c); });
      if (token.empty()) continue;
    }
    std::string lowered = token;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), detail::to_lower);
    if (options.remove_stopwords && stopwords().contains(lowered)) continue;
    if (options.stem) token = porter_stem(lowered);
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

}  // namespace opinionforge
