#pragma once

// End-to-end build: per-source ingest and merge, optional fusion, graph
// loading, retrofitting, evaluation. Each stage can be cached on disk under
// a key derived from its parameters and input fingerprints.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "retrovec/config.hpp"
#include "retrovec/error.hpp"
#include "retrovec/evalsuite.hpp"
#include "retrovec/interpolate.hpp"
#include "retrovec/kgraph.hpp"
#include "retrovec/labeled_matrix.hpp"
#include "retrovec/labelspace.hpp"
#include "retrovec/matrixio.hpp"
#include "retrovec/retrofit.hpp"
#include "retrovec/rowmerge.hpp"

namespace retrovec {

enum class Stage { ingest, merge, fuse, graph, retrofit, evaluate };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::merge: return "merge";
    case Stage::fuse: return "fuse";
    case Stage::graph: return "graph";
    case Stage::retrofit: return "retrofit";
    case Stage::evaluate: return "evaluate";
  }
  return "?";
}

struct RunOptions {
  /// Empty disables caching.
  std::string cache_dir;
  unsigned threads = 1;
  /// Last stage to run; its product is what gets written to the outputs.
  Stage stop_after = Stage::evaluate;
  std::ostream* log = nullptr;
};

struct PipelineResult {
  LabeledMatrix matrix;
  std::vector<EvalReport> reports;
  std::vector<double> singular_values;
  std::vector<Assertion> assertions;
  /// (stage name, "computed" | "cached") in execution order.
  std::vector<std::pair<std::string, std::string>> stages;
};

namespace detail {

/// 64-bit FNV-1a, fed field by field with separators.
class KeyHasher {
 public:
  KeyHasher& add(std::string_view s) {
    for (unsigned char c : s) mix(c);
    mix(0x1f);
    return *this;
  }
  KeyHasher& add(std::uint64_t v) { return add(std::to_string(v)); }
  KeyHasher& add(bool v) { return add(std::string_view(v ? "1" : "0")); }
  KeyHasher& add(int v) { return add(std::to_string(v)); }

  /// Path, size and mtime; no file contents.
  KeyHasher& add_file(const std::string& path) {
    add(path);
    if (path.empty()) return *this;
    std::error_code ec;
    auto size = std::filesystem::file_size(path, ec);
    add(ec ? std::string("?") : std::to_string(size));
    auto mtime = std::filesystem::last_write_time(path, ec);
    add(ec ? std::string("?") : std::to_string(mtime.time_since_epoch().count()));
    return *this;
  }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  void mix(unsigned char c) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline const char* format_name(EmbeddingFormat f) {
  switch (f) {
    case EmbeddingFormat::glove: return "glove";
    case EmbeddingFormat::word2vec_text: return "word2vec-text";
    case EmbeddingFormat::word2vec_binary: return "word2vec-bin";
    case EmbeddingFormat::native: return "native";
  }
  return "?";
}

inline LabeledMatrix read_source(const EmbeddingSource& src) {
  ReadOptions options{src.keep_first};
  switch (src.format) {
    case EmbeddingFormat::glove: return read_text_embeddings(src.path, false, options);
    case EmbeddingFormat::word2vec_text: return read_text_embeddings(src.path, true, options);
    case EmbeddingFormat::word2vec_binary: return read_word2vec_binary(src.path, options);
    case EmbeddingFormat::native: return read_native(src.path, src.labels_path);
  }
  fail(ErrorCode::ConfigError, "unknown format");
}

/// Single-token English texts among a matrix's standardized labels.
inline TokenSet english_lemma_vocab(const LabeledMatrix& m) {
  TokenSet out;
  for (const auto& label : m.labels()) {
    std::string_view s(label);
    if (!s.starts_with("/c/en/")) continue;
    s.remove_prefix(6);
    if (s.find('_') == std::string_view::npos && s.find('/') == std::string_view::npos) out.emplace(s);
  }
  return out;
}

/// Assertion cache: already-standardized labels, written with 17 significant
/// digits so weights survive the round trip exactly.
inline std::vector<Assertion> read_assertion_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<Assertion> out;
  std::string line;
  while (std::getline(in, line)) {
    auto fields = split_tabs(line);
    if (fields.size() != 4) fail(ErrorCode::ParseError, "corrupt assertion cache '" + path + "'");
    out.push_back({StandardLabel::from_uri(fields[0]), StandardLabel::from_uri(fields[1]),
                   std::strtod(std::string(fields[2]).c_str(), nullptr), std::string(fields[3])});
  }
  return out;
}

class StageRunner {
 public:
  StageRunner(const RunOptions& options, PipelineResult& result) : options_(options), result_(result) {
    if (!options_.cache_dir.empty()) std::filesystem::create_directories(options_.cache_dir);
  }

  template <typename Fn>
  auto run(const std::string& name, Fn&& fn) -> decltype(fn()) {
    auto start = std::chrono::steady_clock::now();
    try {
      auto value = fn();
      note(name, start);
      return value;
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(name, e);
    } catch (const std::filesystem::filesystem_error& e) {
      throw StageError(name, Error(ErrorCode::IoError, e.what()));
    }
  }

  /// Matrix stage with a disk cache.
  template <typename Fn>
  LabeledMatrix matrix_stage(const std::string& name, const std::string& key, Fn&& compute) {
    return run(name, [&] {
      if (!caching()) return mark(name, "computed"), compute();
      auto [mpath, lpath] = matrix_paths(name, key);
      if (std::filesystem::exists(mpath) && std::filesystem::exists(lpath)) {
        mark(name, "cached");
        return read_native(mpath, lpath);
      }
      LabeledMatrix m = compute();
      write_native(m, mpath + ".tmp", lpath + ".tmp");
      std::filesystem::rename(mpath + ".tmp", mpath);
      std::filesystem::rename(lpath + ".tmp", lpath);
      mark(name, "computed");
      return m;
    });
  }

  template <typename Fn>
  std::vector<Assertion> assertion_stage(const std::string& name, const std::string& key, Fn&& compute) {
    return run(name, [&] {
      if (!caching()) return mark(name, "computed"), compute();
      std::string path = cache_path(name, key, ".tsv");
      if (std::filesystem::exists(path)) {
        mark(name, "cached");
        return read_assertion_cache(path);
      }
      std::vector<Assertion> a = compute();
      write_assertions(a, path + ".tmp");
      std::filesystem::rename(path + ".tmp", path);
      mark(name, "computed");
      return a;
    });
  }

  bool caching() const { return !options_.cache_dir.empty(); }

  std::string cache_path(const std::string& name, const std::string& key, const std::string& ext) const {
    std::string safe = name;
    for (char& c : safe)
      if (c == '/' || c == ':' || c == ' ') c = '_';
    return (std::filesystem::path(options_.cache_dir) / (safe + "-" + key + ext)).string();
  }

  std::pair<std::string, std::string> matrix_paths(const std::string& name, const std::string& key) const {
    return {cache_path(name, key, ".emb"), cache_path(name, key, ".labels")};
  }

  void log(const std::string& msg) const {
    if (options_.log) *options_.log << msg << '\n';
  }

 private:
  void mark(const std::string& name, const char* how) { result_.stages.emplace_back(name, how); }

  void note(const std::string& name, std::chrono::steady_clock::time_point start) const {
    auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::string how = result_.stages.empty() || result_.stages.back().first != name ? "done"
                                                                                    : result_.stages.back().second;
    std::ostringstream msg;
    msg << "[" << name << "] " << how << " in " << static_cast<long long>(ms) << " ms";
    log(msg.str());
  }

  const RunOptions& options_;
  PipelineResult& result_;
};

inline void add_standardizer_inputs(KeyHasher& h, const PipelineConfig& c) {
  h.add(c.standardize).add_file(c.stopwords_path).add_file(c.exceptions_path);
}

}  // namespace detail

/// Matrix produced by the ingest and merge steps for one source.
inline LabeledMatrix prepare_source(const EmbeddingSource& src, const PipelineConfig& config,
                                    const Standardizer& standardizer) {
  LabeledMatrix raw = detail::read_source(src);
  LabeledMatrix merged;
  if (config.standardize) {
    LanguageTag lang(src.language);
    TokenSet check = single_token_set(raw.labels());
    merged = standardize_rows(
        raw,
        [&](const std::string& label) -> std::optional<std::string> {
          auto l = standardizer.try_standardize(label, lang, &check);
          if (!l) return std::nullopt;
          return l->uri();
        },
        config.merge);
  } else {
    merged = std::move(raw);
  }
  switch (config.column_norm) {
    case ColumnNorm::l1: merged = l1_normalize_columns(merged); break;
    case ColumnNorm::l2: merged = l2_normalize_columns(merged); break;
    case ColumnNorm::none: break;
  }
  return l2_normalize_rows(merged);
}

inline PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options = {}) {
  config.validate();
  PipelineResult result;
  detail::StageRunner runner(options, result);
  const Standardizer standardizer = runner.run("labels", [&] { return config.make_standardizer(); });
  const auto sources = config.enabled_embeddings();
  bool digits_hashed = false;

  // Ingest + merge per source.
  std::vector<LabeledMatrix> prepared;
  std::vector<std::string> keys;
  for (const auto* src : sources) {
    digits_hashed = digits_hashed || src->digits_hashed;
    detail::KeyHasher h;
    h.add("merge").add(src->name).add(detail::format_name(src->format)).add_file(src->path).add_file(src->labels_path);
    h.add(src->language).add(src->keep_first).add(static_cast<int>(config.merge)).add(static_cast<int>(config.column_norm));
    detail::add_standardizer_inputs(h, config);
    keys.push_back(h.hex());
    prepared.push_back(runner.matrix_stage("merge:" + src->name, keys.back(),
                                           [&] { return prepare_source(*src, config, standardizer); }));
  }
  if (options.stop_after <= Stage::merge) {
    result.matrix = std::move(prepared.front());
    return result;
  }

  // Fusion.
  LabeledMatrix current;
  std::string current_key = keys.front();
  if (prepared.size() == 2) {
    std::size_t total_dims = prepared[0].dims() + prepared[1].dims();
    if (config.fusion_discount && config.fusion_out_dims > total_dims)
      throw StageError("fuse", Error(ErrorCode::ConfigError, "fusion.out_dims " + std::to_string(config.fusion_out_dims) +
                                                                 " exceeds the combined " + std::to_string(total_dims) +
                                                                 " dimensions"));
    detail::KeyHasher h;
    h.add("fuse").add(keys[0]).add(keys[1]).add(std::uint64_t{config.fusion_k}).add(std::uint64_t{config.fusion_out_dims});
    h.add(config.fusion_discount);
    current_key = h.hex();
    std::string sv_path = runner.caching() ? runner.cache_path("fuse", current_key, ".sv") : std::string();
    bool computed = false;
    current = runner.matrix_stage("fuse", current_key, [&] {
      FusionResult f = fuse(prepared[0], prepared[1],
                            {config.fusion_k, config.fusion_out_dims, config.fusion_discount, options.threads});
      if (!sv_path.empty()) write_singular_values(f.singular_values, sv_path);
      result.singular_values = std::move(f.singular_values);
      computed = true;
      return std::move(f.matrix);
    });
    if (!computed && std::filesystem::exists(sv_path)) {
      std::ifstream in(sv_path);
      for (double v; in >> v;) result.singular_values.push_back(v);
    }
  } else {
    current = std::move(prepared.front());
  }
  prepared.clear();
  if (options.stop_after <= Stage::fuse) {
    result.matrix = std::move(current);
    return result;
  }

  // Graph.
  const auto graphs = config.enabled_graph_sources();
  if (!graphs.empty()) {
    detail::KeyHasher gh;
    gh.add("graph").add(current_key);
    for (const auto* g : graphs) gh.add(g->name).add_file(g->path).add(g->filter);
    for (const auto& s : config.excluded_graph_sources) gh.add("x").add(s);
    for (const auto& [lang, n] : config.term_filter.min_count) gh.add(lang).add(std::uint64_t{n});
    gh.add(std::uint64_t{config.term_filter.other_min_count}).add(std::uint64_t{config.term_filter.max_words});
    detail::add_standardizer_inputs(gh, config);
    const std::string graph_key = gh.hex();

    result.assertions = runner.assertion_stage("graph", graph_key, [&] {
      TokenSet vocab = detail::english_lemma_vocab(current);
      std::vector<Assertion> all;
      for (const auto* g : graphs) {
        LoadStats stats;
        auto loaded = exclude_sources(load_assertions(g->path, standardizer, &vocab, &stats), config.excluded_graph_sources);
        if (g->filter) loaded = filter_terms(loaded, config.term_filter);
        runner.log("[graph] " + g->name + ": " + std::to_string(loaded.size()) + " assertions kept, " +
                   std::to_string(stats.self_edges) + " self-edges and " + std::to_string(stats.unlabelable) +
                   " unlabelable lines dropped");
        all.insert(all.end(), std::make_move_iterator(loaded.begin()), std::make_move_iterator(loaded.end()));
      }
      if (!all.empty()) all = rescale_by_source(std::move(all));
      return all;
    });
    if (options.stop_after == Stage::graph) {
      result.matrix = std::move(current);
      return result;
    }

    detail::KeyHasher rh;
    rh.add("retrofit").add(current_key).add(graph_key).add(config.iterations).add(config.self_loops);
    current_key = rh.hex();
    current = runner.matrix_stage("retrofit", current_key, [&] {
      RetrofitProblem problem = assemble_problem(current, build_association(result.assertions, current.labels()));
      RetrofitOptions ro{config.iterations, config.self_loops, options.threads};
      StepObserver observer;
      if (!config.checkpoint_dir.empty()) {
        std::filesystem::create_directories(config.checkpoint_dir);
        observer = [&](int step, std::span<const float> w) {
          auto base = (std::filesystem::path(config.checkpoint_dir) / ("step" + std::to_string(step))).string();
          write_native(LabeledMatrix(problem.vocab(), problem.dims(), std::vector<float>(w.begin(), w.end())),
                       base + ".emb", base + ".labels");
        };
      }
      return retrofit(problem, ro, observer);
    });
  }
  result.matrix = std::move(current);
  if (options.stop_after <= Stage::retrofit) return result;

  // Evaluation.
  runner.run("evaluate", [&] {
    TermLookup lookup(result.matrix, standardizer,
                      config.standardize ? LookupMode::standardized : LookupMode::exact, digits_hashed);
    for (const auto& entry : config.datasets) {
      Dataset data = load_dataset(entry);
      for (Split split : entry.splits) result.reports.push_back(evaluate(lookup, data, split, {config.oov, 0.95}));
    }
    return 0;
  });
  return result;
}

/// Writes the configured output files for a finished run.
namespace detail {

inline void ensure_parent(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
}

}  // namespace detail

inline void write_outputs(const PipelineConfig& config, const PipelineResult& result, std::ostream& report_out) {
  for (const auto* p : {&config.output_matrix, &config.output_labels, &config.output_report, &config.output_singular_values})
    if (!p->empty()) detail::ensure_parent(*p);
  if (!config.output_matrix.empty()) {
    std::string labels = config.output_labels.empty() ? config.output_matrix + ".labels" : config.output_labels;
    write_native(result.matrix, config.output_matrix, labels);
  }
  if (!config.output_singular_values.empty() && !result.singular_values.empty())
    write_singular_values(result.singular_values, config.output_singular_values);
  if (!result.reports.empty()) {
    write_report_tsv(report_out, result.reports);
    if (!config.output_report.empty()) {
      std::ofstream out(config.output_report, std::ios::trunc);
      if (!out) fail(ErrorCode::IoError, "cannot write '" + config.output_report + "'");
      write_report_tsv(out, result.reports);
    }
  }
}

}  // namespace retrovec
