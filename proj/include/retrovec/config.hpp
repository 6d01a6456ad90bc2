#pragma once

// Declarative pipeline configuration (JSON, schema_version 1). Relative
// paths resolve against the directory of the config file.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrovec/error.hpp"
#include "retrovec/evalsuite.hpp"
#include "retrovec/kgraph.hpp"
#include "retrovec/labelspace.hpp"
#include "retrovec/rowmerge.hpp"

namespace retrovec {

inline constexpr int kConfigSchemaVersion = 1;

enum class EmbeddingFormat { glove, word2vec_text, word2vec_binary, native };
enum class ColumnNorm { l1, l2, none };

struct EmbeddingSource {
  std::string name;
  std::string path;
  std::string labels_path;  // native format only
  EmbeddingFormat format = EmbeddingFormat::glove;
  bool enabled = true;
  std::string language = "en";
  bool keep_first = false;
  /// Source vocabulary writes digits as '#'.
  bool digits_hashed = false;
};

struct GraphSource {
  std::string name;
  std::string path;
  bool enabled = true;
  /// Apply the term-count / word-count filter to this source.
  bool filter = true;
};

struct DatasetSpec {
  std::string name;
  std::string path;
  GoldFormat format = GoldFormat::plain;
  std::string language = "en";
  bool skip_header = false;
  SplitScheme scheme = SplitScheme::none;
  std::string dev_path;
  std::string test_path;
  std::vector<Split> splits = {Split::all};
};

struct PipelineConfig {
  int schema_version = kConfigSchemaVersion;

  // Labels ("St" toggle).
  bool standardize = true;
  std::string stopwords_path;
  std::string exceptions_path;

  std::vector<EmbeddingSource> embeddings;
  MergeStrategy merge = MergeStrategy::zipf;
  ColumnNorm column_norm = ColumnNorm::l1;

  std::size_t fusion_k = 10;
  std::size_t fusion_out_dims = 300;
  bool fusion_discount = true;

  std::vector<GraphSource> graph_sources;
  std::set<std::string> excluded_graph_sources;
  TermFilter term_filter;

  int iterations = 10;
  bool self_loops = true;
  std::string checkpoint_dir;

  std::vector<DatasetSpec> datasets;
  OovPolicy oov = OovPolicy::zero;

  std::string output_matrix;
  std::string output_labels;
  std::string output_report;
  std::string output_singular_values;

  std::vector<const EmbeddingSource*> enabled_embeddings() const {
    std::vector<const EmbeddingSource*> out;
    for (const auto& e : embeddings)
      if (e.enabled) out.push_back(&e);
    return out;
  }
  std::vector<const GraphSource*> enabled_graph_sources() const {
    std::vector<const GraphSource*> out;
    for (const auto& g : graph_sources)
      if (g.enabled) out.push_back(&g);
    return out;
  }

  /// Structural checks that need no data.
  void validate() const {
    if (schema_version != kConfigSchemaVersion)
      fail(ErrorCode::ConfigError, "unsupported schema_version " + std::to_string(schema_version));
    auto enabled = enabled_embeddings();
    if (enabled.empty()) fail(ErrorCode::ConfigError, "no embedding source is enabled");
    if (enabled.size() > 2) fail(ErrorCode::ConfigError, "at most two embedding sources can be fused");
    if (iterations < 1) fail(ErrorCode::ConfigError, "retrofit.iterations must be >= 1");
    if (fusion_k < 1) fail(ErrorCode::ConfigError, "fusion.k must be >= 1");
    if (fusion_out_dims < 1) fail(ErrorCode::ConfigError, "fusion.out_dims must be >= 1");
    if (!standardize && (enabled.size() > 1 || !enabled_graph_sources().empty()))
      fail(ErrorCode::ConfigError, "combining sources requires labels.standardize");
    for (const auto* e : enabled) {
      if (!LanguageTag::valid(e->language)) fail(ErrorCode::ConfigError, "bad language '" + e->language + "'");
      if (e->path.empty()) fail(ErrorCode::ConfigError, "embedding source '" + e->name + "' has no path");
      if (e->format == EmbeddingFormat::native && e->labels_path.empty())
        fail(ErrorCode::ConfigError, "native source '" + e->name + "' needs labels_path");
    }
    for (const auto& d : datasets) {
      if (!LanguageTag::valid(d.language)) fail(ErrorCode::ConfigError, "bad language '" + d.language + "'");
      if (d.scheme == SplitScheme::files && (d.dev_path.empty() || d.test_path.empty()))
        fail(ErrorCode::ConfigError, "dataset '" + d.name + "' uses split files but lacks dev_path/test_path");
      if (d.scheme != SplitScheme::files && d.path.empty())
        fail(ErrorCode::ConfigError, "dataset '" + d.name + "' has no path");
      for (Split s : d.splits)
        if (s != Split::all && d.scheme == SplitScheme::none)
          fail(ErrorCode::ConfigError, "dataset '" + d.name + "' has no dev/test split");
    }
  }

  Standardizer make_standardizer() const {
    LemmaRuleSet rules = LemmaRuleSet::english_default();
    if (!exceptions_path.empty()) rules.add_exceptions(load_exceptions(exceptions_path));
    TokenSet stop = stopwords_path.empty() ? default_stopwords() : load_stopwords(stopwords_path);
    return Standardizer(std::move(rules), std::move(stop));
  }
};

namespace detail {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("field '") + key + "': " + e.what());
  }
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline EmbeddingFormat parse_embedding_format(const std::string& s) {
  if (s == "glove") return EmbeddingFormat::glove;
  if (s == "word2vec-text") return EmbeddingFormat::word2vec_text;
  if (s == "word2vec-bin" || s == "word2vec-binary") return EmbeddingFormat::word2vec_binary;
  if (s == "native") return EmbeddingFormat::native;
  fail(ErrorCode::ConfigError, "unknown embedding format '" + s + "'");
}

inline MergeStrategy parse_merge_strategy(const std::string& s) {
  if (s == "zipf") return MergeStrategy::zipf;
  if (s == "first") return MergeStrategy::first;
  if (s == "unweighted") return MergeStrategy::unweighted;
  fail(ErrorCode::ConfigError, "unknown merge strategy '" + s + "'");
}

inline ColumnNorm parse_column_norm(const std::string& s) {
  if (s == "l1") return ColumnNorm::l1;
  if (s == "l2") return ColumnNorm::l2;
  if (s == "none") return ColumnNorm::none;
  fail(ErrorCode::ConfigError, "unknown column norm '" + s + "'");
}

inline GoldFormat parse_gold_format(const std::string& s) {
  if (s == "plain") return GoldFormat::plain;
  if (s == "men") return GoldFormat::men;
  fail(ErrorCode::ConfigError, "unknown gold format '" + s + "'");
}

inline SplitScheme parse_split_scheme(const std::string& s) {
  if (s == "none") return SplitScheme::none;
  if (s == "round_robin") return SplitScheme::round_robin;
  if (s == "files") return SplitScheme::files;
  fail(ErrorCode::ConfigError, "unknown split scheme '" + s + "'");
}

inline OovPolicy parse_oov(const std::string& s) {
  if (s == "zero") return OovPolicy::zero;
  if (s == "drop") return OovPolicy::drop;
  fail(ErrorCode::ConfigError, "unknown oov policy '" + s + "'");
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using detail::get_or;
  using detail::resolve;
  using nlohmann::json;
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  PipelineConfig c;
  c.schema_version = get_or<int>(j, "schema_version", 0);
  if (c.schema_version != kConfigSchemaVersion)
    fail(ErrorCode::ConfigError, "schema_version must be " + std::to_string(kConfigSchemaVersion));

  const json empty = json::object();
  const json& labels = j.contains("labels") ? j.at("labels") : empty;
  c.standardize = get_or<bool>(labels, "standardize", true);
  c.stopwords_path = resolve(base_dir, get_or<std::string>(labels, "stopwords", ""));
  c.exceptions_path = resolve(base_dir, get_or<std::string>(labels, "exceptions", ""));

  if (j.contains("embeddings")) {
    for (const auto& e : j.at("embeddings")) {
      EmbeddingSource s;
      s.name = get_or<std::string>(e, "name", "embeddings" + std::to_string(c.embeddings.size()));
      s.path = resolve(base_dir, get_or<std::string>(e, "path", ""));
      s.labels_path = resolve(base_dir, get_or<std::string>(e, "labels_path", ""));
      s.format = detail::parse_embedding_format(get_or<std::string>(e, "format", "glove"));
      s.enabled = get_or<bool>(e, "enabled", true);
      s.language = get_or<std::string>(e, "language", "en");
      s.keep_first = get_or<bool>(e, "keep_first", false);
      bool w2v = s.format == EmbeddingFormat::word2vec_text || s.format == EmbeddingFormat::word2vec_binary;
      s.digits_hashed = get_or<bool>(e, "digits_hashed", w2v);
      c.embeddings.push_back(std::move(s));
    }
  }
  const json& merge = j.contains("merge") ? j.at("merge") : empty;
  c.merge = detail::parse_merge_strategy(get_or<std::string>(merge, "strategy", "zipf"));
  const json& norm = j.contains("normalize") ? j.at("normalize") : empty;
  c.column_norm = detail::parse_column_norm(get_or<std::string>(norm, "columns", "l1"));

  const json& fusion = j.contains("fusion") ? j.at("fusion") : empty;
  c.fusion_k = get_or<std::size_t>(fusion, "k", 10);
  c.fusion_out_dims = get_or<std::size_t>(fusion, "out_dims", 300);
  c.fusion_discount = get_or<bool>(fusion, "discount", true);

  const json& graph = j.contains("graph") ? j.at("graph") : empty;
  if (graph.contains("sources")) {
    for (const auto& g : graph.at("sources")) {
      GraphSource s;
      s.name = get_or<std::string>(g, "name", "graph" + std::to_string(c.graph_sources.size()));
      s.path = resolve(base_dir, get_or<std::string>(g, "path", ""));
      s.enabled = get_or<bool>(g, "enabled", true);
      s.filter = get_or<bool>(g, "filter", true);
      if (s.path.empty()) fail(ErrorCode::ConfigError, "graph source '" + s.name + "' has no path");
      c.graph_sources.push_back(std::move(s));
    }
  }
  for (const auto& name : get_or<std::vector<std::string>>(graph, "exclude_sources", {}))
    c.excluded_graph_sources.insert(name);
  c.term_filter.min_count = get_or<std::map<std::string, std::size_t>>(graph, "min_count", {{"en", 4}});
  c.term_filter.other_min_count = get_or<std::size_t>(graph, "other_min_count", 3);
  c.term_filter.max_words = get_or<std::size_t>(graph, "max_words", 3);

  const json& retro = j.contains("retrofit") ? j.at("retrofit") : empty;
  c.iterations = get_or<int>(retro, "iterations", 10);
  c.self_loops = get_or<bool>(retro, "self_loops", true);
  c.checkpoint_dir = resolve(base_dir, get_or<std::string>(retro, "checkpoint_dir", ""));

  const json& evaluation = j.contains("evaluation") ? j.at("evaluation") : empty;
  c.oov = detail::parse_oov(get_or<std::string>(evaluation, "oov", "zero"));
  if (evaluation.contains("datasets")) {
    for (const auto& d : evaluation.at("datasets")) {
      DatasetSpec s;
      s.name = get_or<std::string>(d, "name", "dataset" + std::to_string(c.datasets.size()));
      s.path = resolve(base_dir, get_or<std::string>(d, "path", ""));
      s.format = detail::parse_gold_format(get_or<std::string>(d, "format", "plain"));
      s.language = get_or<std::string>(d, "language", "en");
      s.skip_header = get_or<bool>(d, "skip_header", false);
      s.scheme = detail::parse_split_scheme(get_or<std::string>(d, "split", "none"));
      s.dev_path = resolve(base_dir, get_or<std::string>(d, "dev_path", ""));
      s.test_path = resolve(base_dir, get_or<std::string>(d, "test_path", ""));
      s.splits.clear();
      for (const auto& name : get_or<std::vector<std::string>>(d, "splits", {"all"})) s.splits.push_back(parse_split(name));
      c.datasets.push_back(std::move(s));
    }
  }

  const json& output = j.contains("output") ? j.at("output") : empty;
  c.output_matrix = resolve(base_dir, get_or<std::string>(output, "matrix", ""));
  c.output_labels = resolve(base_dir, get_or<std::string>(output, "labels", ""));
  c.output_report = resolve(base_dir, get_or<std::string>(output, "report", ""));
  c.output_singular_values = resolve(base_dir, get_or<std::string>(output, "singular_values", ""));
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, std::filesystem::absolute(path).parent_path());
}

inline Dataset load_dataset(const DatasetSpec& desc) {
  GoldOptions options{desc.format, LanguageTag(desc.language), desc.skip_header};
  Dataset d;
  d.name = desc.name;
  d.scheme = desc.scheme;
  if (!desc.path.empty()) d.pairs = load_gold(desc.path, options);
  if (desc.scheme == SplitScheme::files) {
    d.dev_pairs = load_gold(desc.dev_path, options);
    d.test_pairs = load_gold(desc.test_path, options);
  }
  return d;
}

}  // namespace retrovec
