#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "retrovec/pipeline.hpp"
#include "test_util.hpp"

using namespace retrovec;
using nlohmann::json;
using testutil::TempDir;

namespace {

const std::string kDemo = RETROVEC_DEMO_DIR;

json minimal_json() {
  return json::parse(R"({
    "schema_version": 1,
    "embeddings": [ { "name": "glove", "path": "glove_toy.txt", "format": "glove" } ],
    "evaluation": { "datasets": [ { "name": "toy", "path": "similarity_toy.txt" } ] }
  })");
}

json full_json() {
  return json::parse(R"({
    "schema_version": 1,
    "embeddings": [
      { "name": "glove", "path": "glove_toy.txt", "format": "glove" },
      { "name": "w2v", "path": "w2v_toy.txt", "format": "word2vec-text" }
    ],
    "fusion": { "k": 3, "out_dims": 10 },
    "graph": {
      "sources": [
        { "name": "conceptnet", "path": "edges.tsv" },
        { "name": "ppdb", "path": "ppdb.tsv", "filter": false }
      ],
      "min_count": { "en": 1 },
      "other_min_count": 1
    },
    "evaluation": { "datasets": [ { "name": "toy", "path": "similarity_toy.txt" } ] }
  })");
}

PipelineConfig config_from(const json& j, const std::string& base = kDemo) { return parse_config(j, base); }

void expect_config_error(const json& j) {
  try {
    config_from(j);
    ADD_FAILURE() << j.dump();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError) << e.what();
  }
}

std::vector<std::string> stage_names(const PipelineResult& r) {
  std::vector<std::string> out;
  for (const auto& [name, how] : r.stages) out.push_back(name);
  return out;
}

}  // namespace

TEST(Config, DefaultsAndPaths) {
  auto c = config_from(minimal_json());
  EXPECT_TRUE(c.standardize);
  EXPECT_EQ(c.merge, MergeStrategy::zipf);
  EXPECT_EQ(c.column_norm, ColumnNorm::l1);
  EXPECT_EQ(c.iterations, 10);
  EXPECT_TRUE(c.self_loops);
  EXPECT_EQ(c.fusion_k, 10u);
  EXPECT_EQ(c.fusion_out_dims, 300u);
  ASSERT_EQ(c.embeddings.size(), 1u);
  EXPECT_EQ(c.embeddings[0].path, (std::filesystem::path(kDemo) / "glove_toy.txt").string());
  EXPECT_FALSE(c.embeddings[0].digits_hashed);
  EXPECT_EQ(c.datasets[0].splits, (std::vector<Split>{Split::all}));
}

TEST(Config, LoadsFileWithComments) {
  auto c = load_config(kDemo + "/config.json");
  EXPECT_EQ(c.enabled_embeddings().size(), 2u);
  EXPECT_EQ(c.enabled_graph_sources().size(), 2u);
  EXPECT_TRUE(c.embeddings[1].digits_hashed);
  EXPECT_FALSE(c.graph_sources[1].filter);
}

TEST(Config, Errors) {
  auto j = minimal_json();
  j["schema_version"] = 2;
  expect_config_error(j);

  j = minimal_json();
  j["embeddings"][0]["enabled"] = false;
  expect_config_error(j);

  j = full_json();
  j["embeddings"].push_back(j["embeddings"][0]);
  j["embeddings"][2]["name"] = "third";
  expect_config_error(j);

  j = minimal_json();
  j["retrofit"]["iterations"] = 0;
  expect_config_error(j);

  j = full_json();
  j["labels"]["standardize"] = false;
  expect_config_error(j);

  j = minimal_json();
  j["merge"]["strategy"] = "median";
  expect_config_error(j);

  j = minimal_json();
  j["normalize"]["columns"] = "max";
  expect_config_error(j);

  j = minimal_json();
  j["evaluation"]["datasets"][0]["splits"] = {"test"};
  expect_config_error(j);

  j = minimal_json();
  j["embeddings"][0]["format"] = "native";
  expect_config_error(j);

  expect_config_error(json::array());
  EXPECT_THROW(load_config(kDemo + "/missing.json"), Error);
}

TEST(Pipeline, MinimalPathMatchesHandComputation) {
  auto c = config_from(minimal_json());
  auto result = run_pipeline(c);
  EXPECT_EQ(stage_names(result), (std::vector<std::string>{"merge:glove"}));
  const auto& m = result.matrix;

  // cat, cats and Cat sit on lines 1-3 and share one label.
  auto raw = read_text_embeddings(kDemo + "/glove_toy.txt", false);
  EXPECT_LT(m.rows(), raw.rows());
  ASSERT_TRUE(m.find("/c/en/cat"));
  for (const char* gone : {"/c/en/cats", "cat"}) EXPECT_FALSE(m.find(gone)) << gone;

  // Hand merge of every group, then L1 columns, then row L2.
  Standardizer st;
  TokenSet check = single_token_set(raw.labels());
  std::map<std::string, std::vector<double>> sums;
  std::map<std::string, double> weights;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    auto label = st.try_standardize(raw.label(i), english(), &check);
    if (!label) continue;
    auto& s = sums[label->uri()];
    s.resize(raw.dims());
    double w = 1.0 / static_cast<double>(i + 1);
    for (std::size_t k = 0; k < raw.dims(); ++k) s[k] += w * raw.at(i, k);
    weights[label->uri()] += w;
  }
  ASSERT_EQ(sums.size(), m.rows());
  std::vector<double> col(raw.dims());
  for (auto& [uri, s] : sums)
    for (std::size_t k = 0; k < s.size(); ++k) col[k] += std::abs(static_cast<double>(static_cast<float>(s[k] / weights[uri])));
  for (auto& [uri, s] : sums) {
    double norm = 0;
    std::vector<double> v(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      v[k] = s[k] / weights[uri] / col[k];
      norm += v[k] * v[k];
    }
    auto row = m.row(*m.find(uri));
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(row[k], v[k] / std::sqrt(norm), 1e-5) << uri;
  }

  ASSERT_EQ(result.reports.size(), 1u);
  EXPECT_EQ(result.reports[0].n, 16u);
  EXPECT_GT(result.reports[0].oov_fraction, 0.0);
}

TEST(Pipeline, FullPathRunsEveryStageInOrder) {
  auto c = config_from(full_json());
  auto result = run_pipeline(c);
  EXPECT_EQ(stage_names(result),
            (std::vector<std::string>{"merge:glove", "merge:w2v", "fuse", "graph", "retrofit"}));
  EXPECT_EQ(result.matrix.dims(), 10u);
  EXPECT_EQ(result.singular_values.size(), 14u);
  // Graph-only and non-English terms acquire vectors.
  for (const char* uri : {"/c/en/automobile", "/c/en/bike", "/c/fr/chat", "/c/de/hund"}) EXPECT_TRUE(result.matrix.find(uri)) << uri;
  for (std::size_t i = 0; i < result.matrix.rows(); ++i) {
    double norm = 0;
    for (float x : result.matrix.row(i)) norm += double(x) * x;
    EXPECT_TRUE(std::abs(norm - 1.0) < 1e-5 || norm == 0.0) << result.matrix.label(i);
  }
  ASSERT_EQ(result.reports.size(), 1u);
  EXPECT_EQ(result.reports[0].oov_fraction, 0.0);

  auto minimal = run_pipeline(config_from(minimal_json()));
  EXPECT_GT(result.reports[0].rho, minimal.reports[0].rho);
}

TEST(Pipeline, ExcludingASourceEqualsPrefiltering) {
  TempDir dir;
  std::string both = testutil::read_file(kDemo + "/edges.tsv") + testutil::read_file(kDemo + "/ppdb.tsv");
  testutil::write_file(dir.file("both.tsv"), both);
  testutil::write_file(dir.file("only.tsv"), testutil::read_file(kDemo + "/edges.tsv"));

  auto j = full_json();
  j["graph"]["sources"] = json::array({{{"name", "all"}, {"path", dir.file("both.tsv")}}});
  j["graph"]["exclude_sources"] = {"ppdb"};
  auto excluded = run_pipeline(config_from(j));

  j["graph"]["sources"] = json::array({{{"name", "all"}, {"path", dir.file("only.tsv")}}});
  j["graph"].erase("exclude_sources");
  auto manual = run_pipeline(config_from(j));

  EXPECT_TRUE(excluded.matrix == manual.matrix);
  EXPECT_FALSE(excluded.matrix.find("/c/en/automobile"));
  ASSERT_EQ(excluded.assertions.size(), manual.assertions.size());
}

TEST(Pipeline, DeterministicNativeFiles) {
  TempDir dir;
  auto c = config_from(full_json());
  std::ostringstream sink;
  for (const char* tag : {"a", "b"}) {
    c.output_matrix = dir.file(std::string(tag) + ".emb");
    c.output_labels = dir.file(std::string(tag) + ".labels");
    write_outputs(c, run_pipeline(c, {.threads = tag[0] == 'a' ? 1u : 4u}), sink);
  }
  EXPECT_EQ(testutil::read_file(dir.file("a.emb")), testutil::read_file(dir.file("b.emb")));
  EXPECT_EQ(testutil::read_file(dir.file("a.labels")), testutil::read_file(dir.file("b.labels")));
}

TEST(Pipeline, CachedRunEqualsStraightThrough) {
  TempDir dir;
  auto c = config_from(full_json());
  auto straight = run_pipeline(c);
  auto first = run_pipeline(c, {.cache_dir = dir.file("cache")});
  auto second = run_pipeline(c, {.cache_dir = dir.file("cache")});
  for (const auto& [name, how] : first.stages) EXPECT_EQ(how, "computed") << name;
  for (const auto& [name, how] : second.stages) EXPECT_EQ(how, "cached") << name;
  EXPECT_TRUE(straight.matrix == first.matrix);
  EXPECT_TRUE(straight.matrix == second.matrix);
  EXPECT_EQ(straight.singular_values, second.singular_values);
  ASSERT_EQ(straight.assertions.size(), second.assertions.size());
  for (std::size_t i = 0; i < straight.assertions.size(); ++i) {
    EXPECT_EQ(straight.assertions[i].start, second.assertions[i].start);
    EXPECT_EQ(straight.assertions[i].weight, second.assertions[i].weight);
  }
  EXPECT_EQ(straight.reports[0].rho, second.reports[0].rho);

  // A changed parameter misses the cache for retrofit only.
  c.iterations = 3;
  auto third = run_pipeline(c, {.cache_dir = dir.file("cache")});
  std::map<std::string, std::string> how(third.stages.begin(), third.stages.end());
  EXPECT_EQ(how["graph"], "cached");
  EXPECT_EQ(how["retrofit"], "computed");
}

TEST(Pipeline, StopAfter) {
  auto c = config_from(full_json());
  auto merged = run_pipeline(c, {.stop_after = Stage::merge});
  EXPECT_EQ(merged.matrix.dims(), 8u);
  EXPECT_TRUE(merged.reports.empty());
  auto fused = run_pipeline(c, {.stop_after = Stage::fuse});
  EXPECT_EQ(fused.matrix.dims(), 10u);
  EXPECT_FALSE(fused.matrix.find("/c/fr/chat"));
  auto graph = run_pipeline(c, {.stop_after = Stage::graph});
  EXPECT_EQ(graph.assertions.size(), 23u);
  auto retro = run_pipeline(c, {.stop_after = Stage::retrofit});
  EXPECT_TRUE(retro.matrix.find("/c/fr/chat"));
  EXPECT_TRUE(retro.reports.empty());
}

TEST(Pipeline, StageErrorsNameTheStage) {
  TempDir dir;
  testutil::write_file(dir.file("bad.tsv"), "/c/en/cat\t/c/en/dog\t-1\tconceptnet\n");
  auto j = full_json();
  j["graph"]["sources"] = json::array({{{"name", "bad"}, {"path", dir.file("bad.tsv")}}});
  try {
    run_pipeline(config_from(j));
    ADD_FAILURE();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "graph");
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveWeight);
    EXPECT_EQ(exit_code(e.code()), 2);
  }

  j = full_json();
  j["fusion"]["out_dims"] = 15;
  try {
    run_pipeline(config_from(j));
    ADD_FAILURE();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "fuse");
    EXPECT_EQ(exit_code(e.code()), 1);
  }

  j = minimal_json();
  j["embeddings"][0]["path"] = dir.file("none.txt");
  try {
    run_pipeline(config_from(j));
    ADD_FAILURE();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "merge:glove");
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }

  testutil::write_file(dir.file("same.txt"), "cat dog 1\nbus car 1\n");
  j = minimal_json();
  j["evaluation"]["datasets"][0]["path"] = dir.file("same.txt");
  try {
    run_pipeline(config_from(j));
    ADD_FAILURE();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "evaluate");
    EXPECT_EQ(exit_code(e.code()), 3);
  }
}

TEST(Pipeline, RawLabelsWithoutStandardization) {
  auto j = minimal_json();
  j["labels"]["standardize"] = false;
  auto result = run_pipeline(config_from(j));
  auto raw = read_text_embeddings(kDemo + "/glove_toy.txt", false);
  EXPECT_EQ(result.matrix.labels(), raw.labels());
  // Exact lookup: "Cats" and "London" in the gold file have no row.
  EXPECT_GT(result.reports[0].oov_fraction, 0.0);
}

TEST(Pipeline, SelfLoopSwitchAndCheckpoints) {
  TempDir dir;
  auto j = full_json();
  j["retrofit"]["checkpoint_dir"] = dir.file("ckpt");
  j["retrofit"]["iterations"] = 3;
  auto with = run_pipeline(config_from(j));
  for (int step = 1; step <= 3; ++step) {
    auto base = dir.file("ckpt/step" + std::to_string(step));
    EXPECT_TRUE(std::filesystem::exists(base + ".emb")) << step;
  }
  auto last = read_native(dir.file("ckpt/step3.emb"), dir.file("ckpt/step3.labels"));
  EXPECT_TRUE(last == with.matrix);

  j["retrofit"]["self_loops"] = false;
  j["retrofit"].erase("checkpoint_dir");
  auto without = run_pipeline(config_from(j));
  EXPECT_FALSE(with.matrix == without.matrix);
}

TEST(Pipeline, MergeStrategiesDiffer) {
  auto j = minimal_json();
  std::map<std::string, LabeledMatrix> out;
  for (const char* s : {"zipf", "first", "unweighted"}) {
    j["merge"]["strategy"] = s;
    out[s] = run_pipeline(config_from(j), {.stop_after = Stage::merge}).matrix;
  }
  EXPECT_FALSE(out["zipf"] == out["first"]);
  EXPECT_FALSE(out["zipf"] == out["unweighted"]);
  EXPECT_FALSE(out["first"] == out["unweighted"]);
}

TEST(Pipeline, WriteOutputs) {
  TempDir dir;
  auto c = config_from(full_json());
  c.output_matrix = dir.file("out/m.emb");
  c.output_report = dir.file("out/r.tsv");
  c.output_singular_values = dir.file("out/sv.txt");
  auto result = run_pipeline(c);
  std::ostringstream shown;
  write_outputs(c, result, shown);
  EXPECT_EQ(testutil::read_file(dir.file("out/r.tsv")), shown.str());
  EXPECT_TRUE(read_native(dir.file("out/m.emb"), dir.file("out/m.emb.labels")) == result.matrix);
  std::istringstream sv(testutil::read_file(dir.file("out/sv.txt")));
  std::size_t lines = 0;
  for (double v; sv >> v;) ++lines;
  EXPECT_EQ(lines, result.singular_values.size());
}
