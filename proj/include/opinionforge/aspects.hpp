#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "error.hpp"
#include "text.hpp"

namespace opinionforge {

struct Aspect {
  std::string key;      // canonical lowercase, spaces as underscores
  std::string display;  // as shown to people
  bool keep_case = false;  // render display verbatim inside questions (acronyms)
};

enum class QuestionVariant { HowIs, WhatIsOpinionOn };

inline std::string_view variant_name(QuestionVariant v) {
  return v == QuestionVariant::HowIs ? "how_is" : "what_is_opinion_on";
}

struct AspectQuery {
  Aspect aspect;
  QuestionVariant variant = QuestionVariant::HowIs;
  std::string question;
};

inline std::string aspect_key_for(std::string_view display) {
  std::string key;
  for (char c : collapse_whitespace(display)) {
    key.push_back(c == ' ' ? '_' : detail::to_lower(c));
  }
  return key;
}

inline Aspect make_aspect(std::string_view display, bool keep_case = false) {
  std::string shown = collapse_whitespace(display);
  if (shown.empty()) throw ValidationError("aspect name must not be empty");
  return Aspect{aspect_key_for(shown), shown, keep_case};
}

/// The ten laptop/tablet features, in their canonical order.
inline std::vector<Aspect> default_aspects() {
  return {
      make_aspect("Display"),   make_aspect("Memory"),  make_aspect("Speaker"),
      make_aspect("Sound"),     make_aspect("Processor"), make_aspect("WiFi", true),
      make_aspect("Battery"),   make_aspect("Brand"),   make_aspect("Operating System"),
      make_aspect("Camera"),
  };
}

inline std::string render_question(const Aspect& aspect, QuestionVariant variant) {
  std::string name = aspect.display;
  if (!aspect.keep_case) {
    std::transform(name.begin(), name.end(), name.begin(), detail::to_lower);
  }
  switch (variant) {
    case QuestionVariant::HowIs:
      return "How is " + name + "?";
    case QuestionVariant::WhatIsOpinionOn:
      return "What is opinion on " + name + "?";
  }
  return {};
}

/// Two queries per aspect, grouped by aspect in input order.
inline std::vector<AspectQuery> generate_questions(const std::vector<Aspect>& aspects) {
  if (aspects.empty()) throw ValidationError("at least one aspect is required");
  std::unordered_set<std::string> keys;
  std::vector<AspectQuery> queries;
  queries.reserve(aspects.size() * 2);
  for (const Aspect& aspect : aspects) {
    if (aspect.key.empty()) throw ValidationError("aspect key must not be empty");
    if (!keys.insert(aspect.key).second) {
      throw ValidationError("duplicate aspect key: " + aspect.key);
    }
    for (auto variant : {QuestionVariant::HowIs, QuestionVariant::WhatIsOpinionOn}) {
      queries.push_back({aspect, variant, render_question(aspect, variant)});
    }
  }
  return queries;
}

/// One aspect per line; a leading '!' keeps the name's casing in questions.
/// Blank lines and lines starting with '#' are ignored.
inline std::vector<Aspect> parse_aspects(std::istream& in) {
  std::vector<Aspect> aspects;
  std::string line;
  while (std::getline(in, line)) {
    std::string trimmed = collapse_whitespace(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    bool keep_case = trimmed.front() == '!';
    if (keep_case) trimmed.erase(0, 1);
    aspects.push_back(make_aspect(trimmed, keep_case));
  }
  return aspects;
}

inline std::vector<Aspect> load_aspects(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open aspects file: " + path.string());
  return parse_aspects(in);
}

}  // namespace opinionforge
