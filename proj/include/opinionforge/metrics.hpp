#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "backend.hpp"
#include "condense.hpp"
#include "error.hpp"
#include "text.hpp"

namespace opinionforge {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class RougeComponent { Precision, Recall, F1 };

inline double component_of(const RougeScore& score, RougeComponent c) {
  switch (c) {
    case RougeComponent::Precision:
      return score.precision;
    case RougeComponent::Recall:
      return score.recall;
    case RougeComponent::F1:
      return score.f1;
  }
  return 0.0;
}

/// Lowercase, split on every non-alphanumeric run. No stemming.
inline std::vector<std::string> tokenize_for_rouge(std::string_view text) {
  return alnum_tokens(text);
}

inline RougeScore make_rouge_score(double overlap, double candidate_total, double reference_total) {
  RougeScore s;
  s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
  s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
  s.f1 = s.precision + s.recall > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

/// Clipped n-gram overlap between token lists.
inline RougeScore rouge_n(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference, int n) {
  if (n != 1 && n != 2) throw ValidationError("rouge_n supports n = 1 or 2");
  const std::size_t order = static_cast<std::size_t>(n);
  auto count = [order](const std::vector<std::string>& tokens) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (tokens.size() < order) return counts;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
      ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                        tokens.begin() + static_cast<std::ptrdiff_t>(i + order))];
    }
    return counts;
  };
  auto cand = count(candidate);
  auto ref = count(reference);
  std::size_t overlap = 0;
  for (const auto& [gram, c] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  auto total = [order](const std::vector<std::string>& t) {
    return t.size() >= order ? static_cast<double>(t.size() - order + 1) : 0.0;
  };
  return make_rouge_score(static_cast<double>(overlap), total(candidate), total(reference));
}

/// Candidate is the summary, reference the source review.
inline RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n) {
  return rouge_n(tokenize_for_rouge(candidate), tokenize_for_rouge(reference), n);
}

/// Per-field mean of ROUGE-n of `summary` against each of `reviews`.
inline RougeScore mean_rouge(std::string_view summary, const std::vector<std::string>& reviews,
                             int n) {
  if (reviews.empty()) throw ValidationError("summary has no source reviews");
  auto cand = tokenize_for_rouge(summary);
  RougeScore mean;
  for (const auto& review : reviews) {
    RougeScore s = rouge_n(cand, tokenize_for_rouge(review), n);
    mean.precision += s.precision;
    mean.recall += s.recall;
    mean.f1 += s.f1;
  }
  double k = static_cast<double>(reviews.size());
  mean.precision /= k;
  mean.recall /= k;
  mean.f1 /= k;
  return mean;
}

using SummaryWithSources = std::pair<std::string, std::vector<std::string>>;

/// Mean over summaries of the mean ROUGE-n component against each source review.
inline double s_rouge(const std::vector<SummaryWithSources>& summaries, int n,
                      RougeComponent component) {
  if (summaries.empty()) throw ValidationError("s_rouge needs at least one summary");
  double total = 0.0;
  for (const auto& [summary, reviews] : summaries) {
    total += component_of(mean_rouge(summary, reviews, n), component);
  }
  return total / static_cast<double>(summaries.size());
}

/// Index of the largest probability; ties go to the lower class.
inline int argmax_class(const SentimentProbs& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<int>(best);
}

inline int predict_sentiment(std::string_view text, ModelBackend& backend) {
  SentimentProbs probs = backend.sentiment(text);
  if (auto err = check_sentiment(std::vector<double>(probs.begin(), probs.end()))) {
    throw ProtocolError("sentiment: " + *err);
  }
  return argmax_class(probs);
}

/// 1 - log6(|mean rating - predicted| + 1): 1 is perfect agreement.
inline double sentiment_agreement(double mean_rating, int predicted) {
  return 1.0 - std::log(std::fabs(mean_rating - predicted) + 1.0) / std::log(6.0);
}

inline double mean_of(const std::vector<int>& values) {
  double sum = 0.0;
  for (int v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

namespace detail {

inline void require_scorable(const SummaryGroup& group) {
  if (group.summary.empty()) {
    throw ValidationError("group " + group.key.name() + " has no summary");
  }
  if (group.member_ratings.empty()) {
    throw ValidationError("group " + group.key.name() + " has no member ratings");
  }
}

}  // namespace detail

/// Mean sentiment agreement over groups, each scored on its final summary.
inline double s_sentiment(const std::vector<SummaryGroup>& groups, ModelBackend& backend) {
  if (groups.empty()) throw ValidationError("s_sentiment needs at least one group");
  double total = 0.0;
  for (const auto& g : groups) {
    detail::require_scorable(g);
    total += sentiment_agreement(mean_of(g.member_ratings), predict_sentiment(g.summary, backend));
  }
  return total / static_cast<double>(groups.size());
}

struct GroupScores {
  std::string group_key;
  std::size_t review_count = 0;
  double mean_rating = 0.0;
  int predicted_sentiment = 0;
  double s_sentiment = 0.0;
  RougeScore rouge1;
  RougeScore rouge2;
};

struct EvalReport {
  std::vector<GroupScores> per_group;
  GroupScores aggregate;  // arithmetic means over per_group
  nlohmann::ordered_json run_config = nlohmann::ordered_json::object();
};

inline EvalReport evaluate(const std::vector<SummaryGroup>& groups, ModelBackend& backend,
                           nlohmann::ordered_json run_config = nlohmann::ordered_json::object()) {
  if (groups.empty()) throw ValidationError("nothing to evaluate");
  EvalReport report;
  report.run_config = std::move(run_config);
  report.aggregate.group_key = "aggregate";
  for (const auto& g : groups) {
    detail::require_scorable(g);
    GroupScores s;
    s.group_key = g.key.name();
    s.review_count = g.review_texts.size();
    s.mean_rating = mean_of(g.member_ratings);
    s.predicted_sentiment = predict_sentiment(g.summary, backend);
    s.s_sentiment = sentiment_agreement(s.mean_rating, s.predicted_sentiment);
    s.rouge1 = mean_rouge(g.summary, g.review_texts, 1);
    s.rouge2 = mean_rouge(g.summary, g.review_texts, 2);
    report.per_group.push_back(s);
  }
  auto& agg = report.aggregate;
  for (const auto& s : report.per_group) {
    agg.review_count += s.review_count;
    agg.mean_rating += s.mean_rating;
    agg.s_sentiment += s.s_sentiment;
    for (auto [dst, src] : {std::pair{&agg.rouge1, &s.rouge1}, std::pair{&agg.rouge2, &s.rouge2}}) {
      dst->precision += src->precision;
      dst->recall += src->recall;
      dst->f1 += src->f1;
    }
  }
  double n = static_cast<double>(report.per_group.size());
  agg.mean_rating /= n;
  agg.s_sentiment /= n;
  for (RougeScore* r : {&agg.rouge1, &agg.rouge2}) {
    r->precision /= n;
    r->recall /= n;
    r->f1 /= n;
  }
  agg.predicted_sentiment = -1;
  return report;
}

// Report emission.

inline nlohmann::ordered_json to_json(const RougeScore& s) {
  nlohmann::ordered_json j;
  j["f1"] = s.f1;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  return j;
}

inline nlohmann::ordered_json to_json(const GroupScores& s) {
  nlohmann::ordered_json j;
  j["group_key"] = s.group_key;
  j["review_count"] = s.review_count;
  j["mean_rating"] = s.mean_rating;
  if (s.predicted_sentiment >= 0) j["predicted_sentiment"] = s.predicted_sentiment;
  j["s_sentiment"] = s.s_sentiment;
  j["rouge1"] = to_json(s.rouge1);
  j["rouge2"] = to_json(s.rouge2);
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["run_config"] = report.run_config;
  j["per_group"] = nlohmann::ordered_json::array();
  for (const auto& s : report.per_group) j["per_group"].push_back(to_json(s));
  j["aggregate"] = to_json(report.aggregate);
  return j;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "group_key,review_count,mean_rating,predicted_sentiment,s_sentiment,"
         "rouge1_f1,rouge1_precision,rouge1_recall,rouge2_f1,rouge2_precision,rouge2_recall\n";
  auto row = [&](const GroupScores& s) {
    out << s.group_key << ',' << s.review_count << ',' << format_fixed(s.mean_rating, 6) << ','
        << (s.predicted_sentiment >= 0 ? std::to_string(s.predicted_sentiment) : std::string())
        << ',' << format_fixed(s.s_sentiment, 6) << ',' << format_fixed(s.rouge1.f1, 6) << ','
        << format_fixed(s.rouge1.precision, 6) << ',' << format_fixed(s.rouge1.recall, 6) << ','
        << format_fixed(s.rouge2.f1, 6) << ',' << format_fixed(s.rouge2.precision, 6) << ','
        << format_fixed(s.rouge2.recall, 6) << '\n';
  };
  for (const auto& s : report.per_group) row(s);
  row(report.aggregate);
}

/// Table with columns Type, OE, model, S, then ROUGE-1 and ROUGE-2 F1/P/R.
inline void write_report_markdown(std::ostream& out, const EvalReport& report,
                                  bool opinion_extraction, std::string_view model) {
  out << "| Type | OE | model | S | R1 F1 | R1 P | R1 R | R2 F1 | R2 P | R2 R |\n"
      << "|---|---|---|---|---|---|---|---|---|---|\n";
  auto row = [&](const GroupScores& s) {
    out << "| " << s.group_key << " | " << (opinion_extraction ? "yes" : "no") << " | " << model
        << " | " << format_fixed(s.s_sentiment, 3) << " | " << format_fixed(s.rouge1.f1, 3)
        << " | " << format_fixed(s.rouge1.precision, 3) << " | "
        << format_fixed(s.rouge1.recall, 3) << " | " << format_fixed(s.rouge2.f1, 3) << " | "
        << format_fixed(s.rouge2.precision, 3) << " | " << format_fixed(s.rouge2.recall, 3)
        << " |\n";
  };
  for (const auto& s : report.per_group) row(s);
  row(report.aggregate);
}

}  // namespace opinionforge
