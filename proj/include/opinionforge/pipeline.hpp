#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspects.hpp"
#include "backend.hpp"
#include "backends.hpp"
#include "condense.hpp"
#include "config.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "metrics.hpp"
#include "mrc.hpp"

namespace opinionforge {

/// Record of one run: config, corpus stats, per-stage timings and errors, and
/// the files written. Written to output_dir/manifest.json exactly once.
struct RunManifest {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json corpus = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, double>> stage_millis;
  std::vector<std::pair<std::string, std::vector<std::string>>> stage_errors;
  std::vector<std::string> artifacts;
  std::string status = "running";
  std::string failed_stage;
  std::string failure;

  std::vector<std::string>& errors_for(const std::string& stage) {
    for (auto& [name, errs] : stage_errors) {
      if (name == stage) return errs;
    }
    return stage_errors.emplace_back(stage, std::vector<std::string>{}).second;
  }
};

inline nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["status"] = m.status;
  if (!m.failed_stage.empty()) {
    j["failed_stage"] = m.failed_stage;
    j["failure"] = m.failure;
  }
  j["config"] = m.config;
  j["corpus"] = m.corpus;
  j["stage_millis"] = nlohmann::ordered_json::object();
  for (const auto& [stage, ms] : m.stage_millis) j["stage_millis"][stage] = ms;
  j["stage_errors"] = nlohmann::ordered_json::object();
  for (const auto& [stage, errs] : m.stage_errors) j["stage_errors"][stage] = errs;
  j["artifacts"] = m.artifacts;
  return j;
}

struct RunResult {
  EvalReport report;
  RunManifest manifest;
  std::vector<SummaryGroup> groups;
  std::vector<OpinionSpan> opinions;
};

inline std::string dump_json(const nlohmann::ordered_json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

inline nlohmann::ordered_json corpus_stats(const Corpus& corpus) {
  nlohmann::ordered_json j;
  j["product_id"] = corpus.product_id;
  j["lines_read"] = corpus.lines_read;
  j["reviews"] = corpus.reviews.size();
  j["dropped_malformed"] = corpus.dropped_malformed;
  j["dropped_duplicates"] = corpus.dropped_duplicates;
  j["dropped_other_product"] = corpus.dropped_other_product;
  return j;
}

/// Produces the final summary of one group under the configured mode.
inline void summarize_group(SummaryGroup& group, const RunConfig& config, ModelBackend& primary,
                            ModelBackend& fusion, std::vector<std::string>& errors) {
  if (config.summarizer_mode == SummarizerMode::SingleShot) {
    group.summary =
        single_shot_summary(group, primary, config.max_input_tokens, config.summary_max_tokens);
    return;
  }
  ChunkedSummaries chunks =
      chunked_summaries(group, primary, config.max_group_size, config.summary_max_tokens);
  for (const auto& err : chunks.errors) {
    errors.push_back(group.key.name() + " chunk " + std::to_string(err.chunk_index) + ": " +
                     err.message);
  }
  group.chunk_summaries = chunks.summaries;
  std::string condensed = condense_summaries(chunks.summaries, primary,
                                             config.effective_cluster_threshold(), config.linkage);
  if (config.summarizer_mode == SummarizerMode::Groupwise) {
    group.summary = std::move(condensed);
    return;
  }
  try {
    group.summary = fusion.summarize(condensed, config.summary_max_tokens);
  } catch (const std::exception& e) {
    throw CondenseError("final fusion pass for " + group.key.name() + " failed: " + e.what());
  }
}

namespace detail {

class StageRunner {
 public:
  explicit StageRunner(RunManifest& manifest) : manifest_(manifest) {}

  template <typename Fn>
  auto operator()(const std::string& stage, Fn&& fn) {
    auto start = std::chrono::steady_clock::now();
    auto record = [&] {
      std::chrono::duration<double, std::milli> took = std::chrono::steady_clock::now() - start;
      manifest_.stage_millis.emplace_back(stage, took.count());
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record();
      } else {
        auto value = fn();
        record();
        return value;
      }
    } catch (const std::exception& e) {
      record();
      manifest_.status = "failed";
      manifest_.failed_stage = stage;
      manifest_.failure = e.what();
      throw;
    }
  }

 private:
  RunManifest& manifest_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content,
                       RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
  manifest.artifacts.push_back(path.string());
}

}  // namespace detail

/// Full pipeline against caller-supplied backends. `fusion` is only used in
/// fused mode. Writes every artifact and the manifest under output_dir.
inline RunResult run(const RunConfig& config, ModelBackend& primary, ModelBackend& fusion) {
  RunResult result;
  RunManifest& manifest = result.manifest;
  manifest.config = to_json(config);
  detail::StageRunner stage(manifest);
  const auto& out_dir = config.output_dir;

  auto write_manifest = [&] {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << dump_json(to_json(manifest));
  };

  try {
    stage("setup", [&] {
      config.validate();
      std::filesystem::create_directories(out_dir);
      if (!primary.healthy()) throw BackendUnavailable("primary backend failed its health check");
      if (config.summarizer_mode == SummarizerMode::Fused && &fusion != &primary &&
          !fusion.healthy()) {
        throw BackendUnavailable("fusion backend failed its health check");
      }
    });

    Corpus corpus = stage("ingest", [&] {
      Corpus c = parse_reviews_file(config.input_path, config.ingest);
      manifest.corpus = corpus_stats(c);
      c = apply_preprocessing(c, config.preprocessing);
      manifest.corpus["reviews_after_preprocessing"] = c.reviews.size();
      return c;
    });

    std::vector<Aspect> aspects = config.aspects_path ? load_aspects(*config.aspects_path)
                                                      : default_aspects();
    std::vector<AspectQuery> queries = stage("questions", [&] { return generate_questions(aspects); });

    if (config.opinion_extraction) {
      stage("extract", [&] {
        ExtractionResult extracted = extract_opinions(corpus, queries, primary, config.extraction);
        auto& errs = manifest.errors_for("extract");
        for (const auto& e : extracted.errors) {
          errs.push_back(e.review_id + " / " + e.question + ": " + e.message);
        }
        result.opinions = std::move(extracted.spans);
        std::string lines;
        for (const auto& span : result.opinions) {
          lines += to_json(span).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
          lines += '\n';
        }
        detail::write_text(out_dir / "opinions.jsonl", lines, manifest);
      });
    }

    std::vector<SummaryGroup> groups = stage("group", [&] {
      GroupingOptions options;
      options.use_opinions = config.opinion_extraction;
      for (const auto& a : aspects) options.aspect_order.push_back(a.key);
      auto gs = group_reviews(corpus, result.opinions, GroupMode::Rating, options);
      if (config.opinion_extraction) {
        for (auto& g : group_reviews(corpus, result.opinions, GroupMode::Aspect, options)) {
          gs.push_back(std::move(g));
        }
      }
      for (auto& g : group_reviews(corpus, result.opinions, GroupMode::AllReviews, options)) {
        gs.push_back(std::move(g));
      }
      if (gs.empty()) throw PipelineError("no non-empty summary groups");
      return gs;
    });

    stage("summarize", [&] {
      auto& errs = manifest.errors_for("summarize");
      for (auto& g : groups) {
        try {
          summarize_group(g, config, primary, fusion, errs);
          if (g.summary.empty()) throw CondenseError("empty summary for " + g.key.name());
          result.groups.push_back(std::move(g));
        } catch (const CondenseError& e) {
          errs.push_back(e.what());
        }
      }
      if (result.groups.empty()) throw PipelineError("every group failed to summarize");
      nlohmann::ordered_json summaries = nlohmann::ordered_json::array();
      for (const auto& g : result.groups) summaries.push_back(to_json(g));
      detail::write_text(out_dir / "summaries.json", dump_json(summaries), manifest);
    });

    stage("evaluate", [&] {
      result.report = evaluate(result.groups, primary, to_json(config));
      detail::write_text(out_dir / "report.json", dump_json(to_json(result.report)), manifest);
      std::ostringstream csv;
      write_report_csv(csv, result.report);
      detail::write_text(out_dir / "report.csv", csv.str(), manifest);
      std::ostringstream md;
      write_report_markdown(md, result.report, config.opinion_extraction,
                            std::string(to_string(config.summarizer_mode)) + "/" +
                                primary.describe());
      detail::write_text(out_dir / "report.md", md.str(), manifest);
    });
    manifest.status = "ok";
  } catch (...) {
    try {
      write_manifest();
    } catch (...) {
    }
    throw;
  }
  write_manifest();
  return result;
}

inline RunResult run(const RunConfig& config) {
  config.validate();
  auto primary = make_backend(config.primary_backend());
  if (config.summarizer_mode != SummarizerMode::Fused) return run(config, *primary, *primary);
  auto fusion = make_backend(config.fusion_backend());
  return run(config, *primary, *fusion);
}

/// Reads a summaries file (as written by `run`) and rebuilds scorable groups
/// against `corpus`. Entries without review_ids resolve rating and
/// all-reviews keys from the corpus.
inline std::vector<SummaryGroup> load_summaries(std::istream& in, const Corpus& corpus) {
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw ValidationError("summaries file must hold a JSON array");
  }
  std::unordered_map<std::string, const Review*> by_id;
  for (const auto& r : corpus.reviews) by_id.emplace(r.id, &r);

  std::vector<SummaryGroup> groups;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("group_key") || !entry.contains("summary") ||
        !entry["group_key"].is_string() || !entry["summary"].is_string()) {
      throw ValidationError("summary entries need string group_key and summary fields");
    }
    std::string name = entry["group_key"].get<std::string>();
    auto key = GroupKey::parse(name);
    if (!key) throw ValidationError("unrecognized group key '" + name + "'");
    SummaryGroup g{*key};
    g.summary = entry["summary"].get<std::string>();
    auto add = [&](const Review& r) {
      g.review_ids.push_back(r.id);
      g.review_texts.push_back(r.text);
      g.member_ratings.push_back(r.rating);
    };
    if (entry.contains("review_ids") && entry["review_ids"].is_array() &&
        !entry["review_ids"].empty()) {
      for (const auto& id : entry["review_ids"]) {
        auto it = by_id.find(id.get<std::string>());
        if (it == by_id.end()) {
          throw ValidationError("group " + name + " references unknown review " + id.get<std::string>());
        }
        add(*it->second);
      }
    } else if (key->kind == GroupKind::Aspect) {
      throw ValidationError("aspect group " + name + " needs review_ids to be scored");
    } else {
      for (const auto& r : corpus.reviews) {
        if (key->kind == GroupKind::AllReviews || r.rating == key->rating) add(r);
      }
    }
    if (g.review_ids.empty()) throw ValidationError("group " + name + " matches no reviews");
    groups.push_back(std::move(g));
  }
  if (groups.empty()) throw ValidationError("summaries file is empty");
  return groups;
}

}  // namespace opinionforge
