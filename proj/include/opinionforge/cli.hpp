#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "backends.hpp"
#include "config.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "metrics.hpp"
#include "mrc.hpp"
#include "pipeline.hpp"
#include "wire_server.hpp"

namespace opinionforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipelineError = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

// Flags shared by every pipeline subcommand. Values are kept as strings and
// layered: config file, then OPINIONFORGE_BACKEND_URL, then explicit flags.
struct RunFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool remove_stopwords = false;
  bool strip_symbols = false;
  bool stem = false;
  bool preprocess = false;
  bool strict_spans = false;
  bool no_extraction = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Flat key=value config file");
    for (const std::string& key : setting_keys()) {
      if (key == "remove-stopwords" || key == "strip-symbols" || key == "stem" ||
          key == "strict-spans" || key == "extraction") {
        continue;
      }
      options[key] = app->add_option("--" + key, values[key]);
    }
    app->add_flag("--remove-stopwords", remove_stopwords, "Drop stopwords before extraction");
    app->add_flag("--strip-symbols", strip_symbols, "Drop symbols and numbers");
    app->add_flag("--stem", stem, "Suffix-stem tokens");
    app->add_flag("--preprocess", preprocess, "All three preprocessing steps");
    app->add_flag("--strict-spans", strict_spans, "Require start < end");
    app->add_flag("--no-extraction", no_extraction, "Summarize raw reviews, skip aspect groups");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_path.empty()) {
      for (const auto& [key, value] : load_config(config_path)) apply_setting(config, key, value);
    }
    if (const char* url = std::getenv(kBackendUrlEnv); url != nullptr && *url != '\0') {
      config.backend.base_url = url;
    }
    for (const std::string& key : setting_keys()) {
      auto it = options.find(key);
      if (it != options.end() && it->second->count() > 0) {
        apply_setting(config, key, values.at(key));
      }
    }
    if (remove_stopwords || preprocess) config.preprocessing.remove_stopwords = true;
    if (strip_symbols || preprocess) config.preprocessing.strip_symbols_numbers = true;
    if (stem || preprocess) config.preprocessing.stem = true;
    if (strict_spans) config.extraction.rule = SpanRule::StrictlyIncreasing;
    if (no_extraction) config.opinion_extraction = false;
    if (config.input_path.empty()) throw CLI::RequiredError("--input");
    return config;
  }
};

inline Corpus load_corpus(const RunConfig& config) {
  return apply_preprocessing(parse_reviews_file(config.input_path, config.ingest),
                             config.preprocessing);
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace detail

/// Entry point of the `opinionforge` tool. Returns 0 on success, 1 when the
/// pipeline fails and 2 on usage errors.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Opinion extraction and review summarization"};
  app.require_subcommand(1);

  detail::RunFlags ingest_flags;
  std::string ingest_output;
  auto* ingest_cmd = app.add_subcommand("ingest", "Clean and deduplicate reviews");
  ingest_flags.attach(ingest_cmd);
  ingest_cmd->add_option("--output", ingest_output, "Cleaned corpus (JSON lines)");

  detail::RunFlags extract_flags;
  std::string extract_output;
  auto* extract_cmd = app.add_subcommand("extract", "Extract aspect opinions only");
  extract_flags.attach(extract_cmd);
  extract_cmd->add_option("--output", extract_output, "Opinion spans (JSON lines)");

  detail::RunFlags summarize_flags;
  auto* summarize_cmd = app.add_subcommand("summarize", "Run the full pipeline");
  summarize_flags.attach(summarize_cmd);

  detail::RunFlags eval_flags;
  std::string summaries_path;
  auto* eval_cmd = app.add_subcommand("eval", "Score existing summaries against a corpus");
  eval_flags.attach(eval_cmd);
  eval_cmd->add_option("--summaries", summaries_path, "Summaries JSON")->required();

  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::uint64_t serve_seed = 0;
  std::string serve_fixtures;
  auto* serve_cmd = app.add_subcommand("mock-serve", "Serve the mock backend over HTTP");
  serve_cmd->add_option("--host", serve_host);
  serve_cmd->add_option("--port", serve_port);
  serve_cmd->add_option("--seed", serve_seed);
  serve_cmd->add_option("--fixtures", serve_fixtures);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve_cmd) {
      MockBackend backend(serve_seed);
      if (!serve_fixtures.empty()) backend.load_fixtures(serve_fixtures);
      auto server = make_wire_server(backend);
      err << "mock backend listening on " << serve_host << ":" << serve_port << std::endl;
      if (!server->listen(serve_host, serve_port)) {
        err << "error: cannot listen on " << serve_host << ":" << serve_port << "\n";
        return kExitPipelineError;
      }
      return kExitOk;
    }

    detail::RunFlags& flags = *ingest_cmd       ? ingest_flags
                              : *extract_cmd    ? extract_flags
                              : *summarize_cmd  ? summarize_flags
                                                : eval_flags;
    RunConfig config;
    try {
      config = flags.resolve();
      config.validate();
    } catch (const CLI::Error& e) {
      err << "error: " << e.what() << "\n" << app.help();
      return kExitUsage;
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }

    if (*ingest_cmd) {
      Corpus corpus = detail::load_corpus(config);
      std::string stats = dump_json(corpus_stats(corpus));
      if (ingest_output.empty()) {
        write_corpus_jsonl(out, corpus);
        err << stats;
      } else {
        auto file = detail::open_output(ingest_output);
        write_corpus_jsonl(file, corpus);
        out << stats;
      }
      return kExitOk;
    }

    if (*extract_cmd) {
      Corpus corpus = detail::load_corpus(config);
      auto aspects = config.aspects_path ? load_aspects(*config.aspects_path) : default_aspects();
      auto backend = make_backend(config.primary_backend());
      auto result = extract_opinions(corpus, generate_questions(aspects), *backend, config.extraction);
      std::ofstream file;
      std::ostream* sink = &out;
      if (!extract_output.empty()) {
        file = detail::open_output(extract_output);
        sink = &file;
      }
      for (const auto& span : result.spans) {
        *sink << to_json(span).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
      }
      err << result.spans.size() << " opinions from " << result.pairs << " pairs, "
          << result.errors.size() << " failed\n";
      return kExitOk;
    }

    if (*summarize_cmd) {
      RunResult result = run(config);
      write_report_markdown(out, result.report, config.opinion_extraction,
                            std::string(to_string(config.summarizer_mode)));
      err << "artifacts written to " << config.output_dir.string() << "\n";
      return kExitOk;
    }

    // eval
    Corpus corpus = detail::load_corpus(config);
    std::ifstream summaries_in(summaries_path);
    if (!summaries_in) throw IoError("cannot open summaries file: " + summaries_path);
    auto groups = load_summaries(summaries_in, corpus);
    auto backend = make_backend(config.primary_backend());
    EvalReport report = evaluate(groups, *backend, to_json(config));
    if (eval_flags.options.at("output-dir")->count() > 0) {
      std::filesystem::create_directories(config.output_dir);
      detail::open_output((config.output_dir / "report.json").string())
          << dump_json(to_json(report));
      std::ofstream csv = detail::open_output((config.output_dir / "report.csv").string());
      write_report_csv(csv, report);
    }
    write_report_markdown(out, report, false, "external");
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPipelineError;
  }
}

}  // namespace opinionforge
