#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspects.hpp"
#include "backend.hpp"
#include "cluster.hpp"
#include "condense.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "mrc.hpp"
#include "text.hpp"

namespace opinionforge {

enum class SummarizerMode { Groupwise, SingleShot, Fused };

/// Threshold used with mock embeddings when none is configured. Signed
/// feature-hash vectors of unrelated sentences sit about sqrt(2) apart, so the
/// 1.5 default for real sentence encoders would merge everything.
inline constexpr double kMockClusterThreshold = 1.0;

struct RunConfig {
  std::filesystem::path input_path;
  IngestOptions ingest;
  PreprocessOptions preprocessing;
  bool opinion_extraction = true;
  ExtractionOptions extraction;
  std::optional<std::filesystem::path> aspects_path;
  SummarizerMode summarizer_mode = SummarizerMode::Fused;
  int max_group_size = kDefaultMaxGroupSize;
  std::optional<double> cluster_threshold;
  Linkage linkage = Linkage::Average;
  int summary_max_tokens = kDefaultSummaryTokens;
  int max_input_tokens = kDefaultSingleShotInputTokens;
  BackendConfig backend;
  std::optional<BackendConfig> second_backend;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  double effective_cluster_threshold() const {
    if (cluster_threshold) return *cluster_threshold;
    return backend.kind == BackendKind::Mock ? kMockClusterThreshold : kDefaultClusterThreshold;
  }

  /// Backend configs with the run seed applied.
  BackendConfig primary_backend() const {
    BackendConfig c = backend;
    c.seed = seed;
    return c;
  }
  BackendConfig fusion_backend() const {
    BackendConfig c = second_backend.value_or(backend);
    c.seed = seed;
    return c;
  }

  void validate() const {
    if (input_path.empty()) throw ValidationError("an input path is required");
    if (max_group_size < 1) throw ValidationError("max_group_size must be >= 1");
    if (cluster_threshold && !(*cluster_threshold > 0.0)) {
      throw ValidationError("cluster_threshold must be > 0");
    }
    if (summary_max_tokens < 1) throw ValidationError("summary token limit must be >= 1");
    if (summarizer_mode == SummarizerMode::SingleShot &&
        max_input_tokens < kMinSingleShotInputTokens) {
      throw ValidationError("max_input_tokens must be >= 64");
    }
    if (extraction.min_confidence < 0.0) throw ValidationError("min_confidence must be >= 0");
    backend.validate();
    if (second_backend) second_backend->validate();
  }
};

inline std::string_view to_string(SummarizerMode m) {
  switch (m) {
    case SummarizerMode::Groupwise:
      return "groupwise";
    case SummarizerMode::SingleShot:
      return "single_shot";
    case SummarizerMode::Fused:
      return "fused";
  }
  return "";
}

inline std::string_view to_string(Decoder d) { return d == Decoder::Joint ? "joint" : "sequential"; }

inline std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::Average:
      return "average";
    case Linkage::Single:
      return "single";
    case Linkage::Complete:
      return "complete";
  }
  return "";
}

namespace detail {

inline bool parse_bool(std::string_view key, std::string value) {
  std::transform(value.begin(), value.end(), value.begin(), to_lower);
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ValidationError("'" + std::string(key) + "' expects a boolean, got '" + value + "'");
}

inline long long parse_int(std::string_view key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw ValidationError("'" + std::string(key) + "' expects an integer, got '" + value + "'");
  }
  return v;
}

inline double parse_double(std::string_view key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw ValidationError("'" + std::string(key) + "' expects a number, got '" + value + "'");
  }
  return v;
}

inline BackendKind parse_backend_kind(std::string_view key, const std::string& value) {
  if (value == "mock") return BackendKind::Mock;
  if (value == "http") return BackendKind::Http;
  throw ValidationError("'" + std::string(key) + "' must be mock or http");
}

}  // namespace detail

/// Setting keys accepted in config files; CLI flags use the same names.
inline const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> kKeys = {
      "input", "product", "text-field", "rating-field", "product-field",
      "remove-stopwords", "strip-symbols", "stem", "extraction", "decoder",
      "strict-spans", "min-confidence", "workers", "aspects", "mode",
      "max-group-size", "cluster-threshold", "linkage", "summary-tokens", "max-input-tokens",
      "backend", "backend-url", "timeout-ms", "retries", "concurrency",
      "seed", "fixtures", "second-backend", "second-backend-url", "output-dir",
  };
  return kKeys;
}

inline void apply_setting(RunConfig& c, std::string_view key, const std::string& value) {
  using namespace detail;
  auto second = [&]() -> BackendConfig& {
    if (!c.second_backend) c.second_backend = c.backend;
    return *c.second_backend;
  };
  if (key == "input") {
    c.input_path = value;
  } else if (key == "product") {
    c.ingest.product_filter = value;
  } else if (key == "text-field") {
    c.ingest.text_field = value;
  } else if (key == "rating-field") {
    c.ingest.rating_field = value;
  } else if (key == "product-field") {
    c.ingest.product_field = value;
  } else if (key == "remove-stopwords") {
    c.preprocessing.remove_stopwords = parse_bool(key, value);
  } else if (key == "strip-symbols") {
    c.preprocessing.strip_symbols_numbers = parse_bool(key, value);
  } else if (key == "stem") {
    c.preprocessing.stem = parse_bool(key, value);
  } else if (key == "extraction") {
    c.opinion_extraction = parse_bool(key, value);
  } else if (key == "decoder") {
    if (value == "sequential") {
      c.extraction.decoder = Decoder::Sequential;
    } else if (value == "joint") {
      c.extraction.decoder = Decoder::Joint;
    } else {
      throw ValidationError("decoder must be sequential or joint");
    }
  } else if (key == "strict-spans") {
    c.extraction.rule = parse_bool(key, value) ? SpanRule::StrictlyIncreasing
                                               : SpanRule::AllowSingleToken;
  } else if (key == "min-confidence") {
    c.extraction.min_confidence = parse_double(key, value);
  } else if (key == "workers") {
    c.extraction.workers = static_cast<int>(parse_int(key, value));
  } else if (key == "aspects") {
    c.aspects_path = value;
  } else if (key == "mode") {
    if (value == "groupwise") {
      c.summarizer_mode = SummarizerMode::Groupwise;
    } else if (value == "single_shot") {
      c.summarizer_mode = SummarizerMode::SingleShot;
    } else if (value == "fused") {
      c.summarizer_mode = SummarizerMode::Fused;
    } else {
      throw ValidationError("mode must be groupwise, single_shot or fused");
    }
  } else if (key == "max-group-size") {
    c.max_group_size = static_cast<int>(parse_int(key, value));
  } else if (key == "cluster-threshold") {
    c.cluster_threshold = parse_double(key, value);
  } else if (key == "linkage") {
    if (value == "average") {
      c.linkage = Linkage::Average;
    } else if (value == "single") {
      c.linkage = Linkage::Single;
    } else if (value == "complete") {
      c.linkage = Linkage::Complete;
    } else {
      throw ValidationError("linkage must be average, single or complete");
    }
  } else if (key == "summary-tokens") {
    c.summary_max_tokens = static_cast<int>(parse_int(key, value));
  } else if (key == "max-input-tokens") {
    c.max_input_tokens = static_cast<int>(parse_int(key, value));
  } else if (key == "backend") {
    c.backend.kind = parse_backend_kind(key, value);
  } else if (key == "backend-url") {
    c.backend.base_url = value;
  } else if (key == "timeout-ms") {
    c.backend.timeout = std::chrono::milliseconds(parse_int(key, value));
  } else if (key == "retries") {
    c.backend.max_retries = static_cast<int>(parse_int(key, value));
  } else if (key == "concurrency") {
    c.backend.max_concurrency = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "fixtures") {
    c.backend.fixtures_path = value;
  } else if (key == "second-backend") {
    second().kind = parse_backend_kind(key, value);
  } else if (key == "second-backend-url") {
    second().base_url = value;
  } else if (key == "output-dir") {
    c.output_dir = value;
  } else {
    throw ValidationError("unknown setting '" + std::string(key) + "'");
  }
}

/// Flat `key = value` lines; '#' starts a comment line.
inline std::vector<std::pair<std::string, std::string>> parse_config(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> settings;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = collapse_whitespace(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + " has no '='");
    }
    std::string key = collapse_whitespace(line.substr(0, eq));
    std::string value = collapse_whitespace(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    settings.emplace_back(std::move(key), std::move(value));
  }
  return settings;
}

inline std::vector<std::pair<std::string, std::string>> load_config(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  return parse_config(in);
}

inline constexpr const char* kBackendUrlEnv = "OPINIONFORGE_BACKEND_URL";

/// Echo of every setting that affects outputs. The output directory is left
/// out so that runs into different directories produce identical reports.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["input"] = c.input_path.string();
  j["product"] = c.ingest.product_filter;
  j["text_field"] = c.ingest.text_field;
  j["rating_field"] = c.ingest.rating_field;
  j["product_field"] = c.ingest.product_field;
  j["remove_stopwords"] = c.preprocessing.remove_stopwords;
  j["strip_symbols"] = c.preprocessing.strip_symbols_numbers;
  j["stem"] = c.preprocessing.stem;
  j["opinion_extraction"] = c.opinion_extraction;
  j["decoder"] = to_string(c.extraction.decoder);
  j["strict_spans"] = c.extraction.rule == SpanRule::StrictlyIncreasing;
  j["min_confidence"] = c.extraction.min_confidence;
  j["aspects"] = c.aspects_path ? c.aspects_path->string() : std::string("default");
  j["mode"] = to_string(c.summarizer_mode);
  j["max_group_size"] = c.max_group_size;
  j["cluster_threshold"] = c.effective_cluster_threshold();
  j["linkage"] = to_string(c.linkage);
  j["summary_tokens"] = c.summary_max_tokens;
  j["max_input_tokens"] = c.max_input_tokens;
  j["backend"] = to_string(c.backend.kind);
  if (c.backend.kind == BackendKind::Http) j["backend_url"] = c.backend.base_url;
  if (c.summarizer_mode == SummarizerMode::Fused) {
    BackendConfig second = c.fusion_backend();
    j["second_backend"] = to_string(second.kind);
    if (second.kind == BackendKind::Http) j["second_backend_url"] = second.base_url;
  }
  j["seed"] = c.seed;
  return j;
}

}  // namespace opinionforge
