#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "retrovec/retrovec.hpp"

namespace {

struct Common {
  std::string config;
  std::string cache_dir;
  unsigned threads = 1;
  unsigned long long seed = 0;
  bool quiet = false;
};

struct Outputs {
  std::string matrix;
  std::string labels;
  std::string assertions;
  std::string report;
};

void add_common(CLI::App* cmd, Common& c, bool need_config) {
  auto* opt = cmd->add_option("-c,--config", c.config, "Pipeline config (JSON)");
  if (need_config) opt->required();
  cmd->add_option("--stage-cache-dir", c.cache_dir, "Directory for cached stage outputs");
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  cmd->add_option("--seed", c.seed, "Reserved; no stage is random");
  cmd->add_flag("-q,--quiet", c.quiet, "No progress messages on stderr");
}

void add_outputs(CLI::App* cmd, Outputs& o) {
  cmd->add_option("--output-matrix", o.matrix, "Override output.matrix");
  cmd->add_option("--output-labels", o.labels, "Override output.labels");
}

retrovec::RunOptions run_options(const Common& c, retrovec::Stage stop) {
  retrovec::RunOptions r;
  r.cache_dir = c.cache_dir;
  r.threads = c.threads;
  r.stop_after = stop;
  r.log = c.quiet ? nullptr : &std::cerr;
  return r;
}

void apply_outputs(retrovec::PipelineConfig& config, const Outputs& o) {
  if (!o.matrix.empty()) config.output_matrix = o.matrix;
  if (!o.labels.empty()) config.output_labels = o.labels;
  if (!o.report.empty()) config.output_report = o.report;
}

int run_stage(const Common& c, const Outputs& o, retrovec::Stage stop) {
  retrovec::PipelineConfig config = retrovec::load_config(c.config);
  apply_outputs(config, o);
  retrovec::PipelineResult result = retrovec::run_pipeline(config, run_options(c, stop));
  if (stop == retrovec::Stage::graph) {
    if (!o.assertions.empty()) retrovec::write_assertions(result.assertions, o.assertions);
    std::cout << result.assertions.size() << " assertions\n";
    return 0;
  }
  retrovec::write_outputs(config, result, std::cout);
  if (stop != retrovec::Stage::evaluate)
    std::cout << result.matrix.rows() << " rows x " << result.matrix.dims() << " dims\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build, retrofit and evaluate term embeddings"};
  app.require_subcommand(1);

  Common common;
  Outputs outputs;

  auto* ingest = app.add_subcommand("ingest", "Read and standardize the first enabled source, or convert one file");
  add_common(ingest, common, false);
  add_outputs(ingest, outputs);
  std::string input, input_labels, input_format = "glove";
  ingest->add_option("--input", input, "Convert this embedding file to the native format instead");
  ingest->add_option("--input-labels", input_labels, "Labels file for native input");
  ingest->add_option("--format", input_format, "glove | word2vec-text | word2vec-bin | native");

  auto* merge = app.add_subcommand("merge", "Standardize, merge and normalize the first enabled source");
  add_common(merge, common, true);
  add_outputs(merge, outputs);

  auto* fuse = app.add_subcommand("fuse", "Run through fusion of the enabled sources");
  add_common(fuse, common, true);
  add_outputs(fuse, outputs);

  auto* graph = app.add_subcommand("graph", "Load, filter and rescale the graph sources");
  add_common(graph, common, true);
  graph->add_option("--output-assertions", outputs.assertions, "Write the processed assertions as TSV");

  auto* retro = app.add_subcommand("retrofit", "Run through retrofitting");
  add_common(retro, common, true);
  add_outputs(retro, outputs);

  auto* eval = app.add_subcommand("evaluate", "Evaluate the configured datasets");
  add_common(eval, common, true);
  std::string eval_matrix, eval_labels;
  eval->add_option("--matrix", eval_matrix, "Evaluate this native matrix instead of building one");
  eval->add_option("--labels", eval_labels, "Labels for --matrix");
  eval->add_option("--report", outputs.report, "Override output.report");

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write all outputs");
  add_common(pipeline, common, true);
  add_outputs(pipeline, outputs);
  pipeline->add_option("--report", outputs.report, "Override output.report");

  CLI11_PARSE(app, argc, argv);

  try {
    using retrovec::Stage;
    if (ingest->parsed()) {
      if (!input.empty()) {
        if (outputs.matrix.empty()) throw CLI::ValidationError("--output-matrix", "required with --input");
        retrovec::EmbeddingSource src;
        src.path = input;
        src.labels_path = input_labels;
        src.format = retrovec::detail::parse_embedding_format(input_format);
        retrovec::LabeledMatrix m = retrovec::detail::read_source(src);
        retrovec::write_native(m, outputs.matrix, outputs.labels.empty() ? outputs.matrix + ".labels" : outputs.labels);
        std::cout << m.rows() << " rows x " << m.dims() << " dims\n";
        return 0;
      }
      if (common.config.empty()) throw CLI::ValidationError("--config", "required unless --input is given");
      return run_stage(common, outputs, Stage::ingest);
    }
    if (merge->parsed()) return run_stage(common, outputs, Stage::merge);
    if (fuse->parsed()) return run_stage(common, outputs, Stage::fuse);
    if (graph->parsed()) return run_stage(common, outputs, Stage::graph);
    if (retro->parsed()) return run_stage(common, outputs, Stage::retrofit);
    if (eval->parsed()) {
      if (eval_matrix.empty()) {
        retrovec::PipelineConfig config = retrovec::load_config(common.config);
        config.output_matrix.clear();
        apply_outputs(config, outputs);
        retrovec::write_outputs(config, retrovec::run_pipeline(config, run_options(common, Stage::evaluate)), std::cout);
        return 0;
      }
      retrovec::PipelineConfig config = retrovec::load_config(common.config);
      apply_outputs(config, outputs);
      retrovec::PipelineResult result;
      result.matrix = retrovec::read_native(eval_matrix, eval_labels.empty() ? eval_matrix + ".labels" : eval_labels);
      bool hashed = false;
      for (const auto* e : config.enabled_embeddings()) hashed = hashed || e->digits_hashed;
      retrovec::TermLookup lookup(result.matrix, config.make_standardizer(),
                                  config.standardize ? retrovec::LookupMode::standardized : retrovec::LookupMode::exact,
                                  hashed);
      for (const auto& entry : config.datasets) {
        retrovec::Dataset data = retrovec::load_dataset(entry);
        for (auto split : entry.splits) result.reports.push_back(retrovec::evaluate(lookup, data, split, {config.oov, 0.95}));
      }
      config.output_matrix.clear();
      retrovec::write_outputs(config, result, std::cout);
      return 0;
    }
    if (pipeline->parsed()) return run_stage(common, outputs, Stage::evaluate);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const retrovec::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return retrovec::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
