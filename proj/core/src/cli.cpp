#include "rankml/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pipeline_json.hpp"
#include "rankml/error.hpp"
#include "rankml/eval.hpp"
#include "rankml/knowledge_base.hpp"
#include "rankml/meta_features.hpp"
#include "rankml/pipeline.hpp"
#include "rankml/ranker.hpp"
#include "rankml/tabular.hpp"

namespace rankml {

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << text;
  if (!out.flush()) throw Error("failed writing file '" + path + "'");
}

struct ExtractArgs {
  std::string file, target, task;
};
struct EncodeArgs {
  std::string file;
  std::size_t slots = 0;
};
struct KbImportArgs {
  std::string records, kb;
};
struct KbStatsArgs {
  std::string kb;
};
struct TrainArgs {
  std::string kb, task, metric, out;
  std::uint64_t seed = 0;
};
struct RankArgs {
  std::string model, data, target, kb;
  int k = 10;
};
struct EvaluateArgs {
  std::string kb, task, metric, out;
  std::vector<int> k{1, 5, 10};
  std::uint64_t seed = 0;
};
struct SynthArgs {
  std::size_t datasets = 30;
  std::size_t pipelines = 200;
  double noise = 0.0;
  double interaction = 1.0;
  std::uint64_t seed = 1;
  std::string out;
};

void run_extract(const ExtractArgs& a, std::ostream& out) {
  const TabularDataset d = load_dataset(a.file, a.target, task_from_name(a.task));
  const MetaFeatureVector mf = extract_meta_features(d);
  nlohmann::json j;
  j["meta_features"] = mf.values;
  j["schema_version"] = mf.schema_version;
  out << j.dump() << '\n';
}

void run_encode(const EncodeArgs& a, std::ostream& out) {
  const PipelineGraph g = pipeline_from_json_text(read_text_file(a.file));
  const std::size_t slots = a.slots == 0 ? g.nodes.size() : a.slots;
  const PipelineSequence seq = encode_pipeline(g, slots);
  const PrimitiveVocabulary vocabulary = PrimitiveVocabulary::from_pipelines({g});
  nlohmann::json j;
  j["slot_count"] = seq.slot_count;
  j["tokens"] = seq.tokens;
  j["names"] = emitted_names(g, slots);
  j["features"] = featurize_sequence(seq, vocabulary);
  out << j.dump() << '\n';
}

void run_kb_import(const KbImportArgs& a, std::ostream& out, std::ostream& err,
                   bool verbose) {
  KnowledgeBase kb;
  if (std::filesystem::exists(a.kb)) kb = kb_load(a.kb);
  std::ifstream in(a.records, std::ios::binary);
  if (!in) throw Error("cannot open records file '" + a.records + "'");
  std::string line;
  std::size_t line_number = 0, imported = 0, stored = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = a.records + " line " + std::to_string(line_number);
    ++imported;
    if (kb.insert(record_from_json_text(line, where))) ++stored;
  }
  kb_save(kb, a.kb);
  if (verbose)
    err << "imported " << imported << " records into '" << a.kb << "'\n";
  nlohmann::json j;
  j["imported"] = imported;
  j["stored"] = stored;
  j["records"] = kb.size();
  j["kb"] = a.kb;
  out << j.dump() << '\n';
}

void run_kb_stats(const KbStatsArgs& a, std::ostream& out) {
  const KnowledgeBase kb = kb_load(a.kb);
  const KbStats stats = kb_stats(kb);
  nlohmann::json j;
  j["records"] = stats.record_count;
  j["datasets"] = stats.dataset_count;
  j["topologies"] = stats.topology_count;
  j["max_length"] = stats.max_length;
  out << j.dump() << '\n';
}

void run_train(const TrainArgs& a, std::ostream& out, std::ostream& err, bool verbose) {
  const KnowledgeBase kb = kb_load(a.kb);
  const TrainingBundle bundle =
      build_training_groups(kb, task_from_name(a.task), metric_from_name(a.metric));
  RankConfig config;
  config.seed = a.seed;
  if (verbose)
    err << "training on " << bundle.groups.size() << " groups, width "
        << bundle.feature_width() << '\n';
  const RankModel model = train(bundle, config);
  model_save(model, a.out);
  std::size_t rows = 0;
  for (const TrainingGroup& g : bundle.groups) rows += g.labels.size();
  nlohmann::json j;
  j["out"] = a.out;
  j["groups"] = bundle.groups.size();
  j["rows"] = rows;
  j["feature_width"] = bundle.feature_width();
  j["trees"] = model.trees.size();
  out << j.dump() << '\n';
}

void run_rank(const RankArgs& a, std::ostream& out, std::ostream& err) {
  if (a.k < 1) throw Error("k must be at least 1");
  const RankModel model = model_load(a.model);
  const TabularDataset d = load_dataset(a.data, a.target, model.task);
  const MetaFeatureVector mf = extract_meta_features(d);
  const KnowledgeBase kb = kb_load(a.kb);
  const std::vector<PipelineGraph> candidates = kb.candidates(model.task, model.metric);
  if (candidates.empty())
    throw Error("knowledge base '" + a.kb + "' holds no candidates for task '" +
                std::string(task_name(model.task)) + "' and metric '" +
                std::string(metric_name(model.metric)) + "'");
  const RankingResult result = rank_candidates(model, mf, candidates);
  if (!result.skipped.empty())
    err << "warning: skipped " << result.skipped.size()
        << " candidates longer than the model's " << model.slot_count << " slots\n";
  if (result.unknown_tokens > 0)
    err << "warning: " << result.unknown_tokens
        << " pipeline slots used primitives outside the model vocabulary\n";
  nlohmann::json j = nlohmann::json::array();
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(a.k),
                                                 result.ranked.size());
  for (std::size_t i = 0; i < take; ++i) {
    nlohmann::json entry;
    entry["pipeline"] = detail::pipeline_to_json(candidates[result.ranked[i].index]);
    entry["score"] = result.ranked[i].score;
    j.push_back(std::move(entry));
  }
  out << j.dump() << '\n';
}

void run_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err,
                  bool verbose) {
  const KnowledgeBase kb = kb_load(a.kb);
  RankConfig config;
  config.seed = a.seed;
  if (verbose) err << "running leave-one-out evaluation on '" << a.kb << "'\n";
  const LooReport report = loo_evaluate(kb, task_from_name(a.task),
                                        metric_from_name(a.metric), config, a.k);
  const std::string text = loo_report_to_json_text(report) + "\n";
  if (!a.out.empty()) write_text_file(a.out, text);
  out << text;
}

void run_synth(const SynthArgs& a, std::ostream& out) {
  OracleConfig cfg;
  cfg.n_datasets = a.datasets;
  cfg.n_pipelines = a.pipelines;
  cfg.noise_std = a.noise;
  cfg.interaction_strength = a.interaction;
  cfg.seed = a.seed;
  const SyntheticCorpus corpus = generate_synthetic_kb(cfg);
  kb_save(corpus.kb, a.out);
  nlohmann::json j;
  j["out"] = a.out;
  j["datasets"] = a.datasets;
  j["pipelines"] = a.pipelines;
  j["records"] = corpus.kb.size();
  out << j.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rankml: rank candidate ML pipelines for a dataset without executing them"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("--verbose", verbose, "Print progress diagnostics to standard error");

  const std::vector<std::string> task_names{"classification", "regression"};
  const std::vector<std::string> metric_names{"accuracy", "mse"};

  ExtractArgs extract_args;
  CLI::App* extract = app.add_subcommand(
      "extract-meta", "Compute the meta-feature vector of a delimited-text dataset");
  extract->fallthrough();
  extract->add_option("file", extract_args.file, "Dataset file (comma-delimited, header row)")
      ->required();
  extract->add_option("--target", extract_args.target, "Target column name")->required();
  extract->add_option("--task", extract_args.task, "Prediction task")
      ->required()
      ->check(CLI::IsMember(task_names));

  EncodeArgs encode_args;
  CLI::App* encode = app.add_subcommand(
      "encode", "Serialize a pipeline JSON file into its token sequence and features");
  encode->fallthrough();
  encode->add_option("file", encode_args.file, "Pipeline JSON file")->required();
  encode->add_option("--slots", encode_args.slots,
                     "Sequence length L (default: the pipeline's node count)");

  CLI::App* kb = app.add_subcommand("kb", "Inspect or extend a knowledge base");
  kb->require_subcommand(1);
  kb->fallthrough();

  KbImportArgs kb_import_args;
  CLI::App* kb_import = kb->add_subcommand(
      "import", "Merge JSON Lines performance records into a knowledge base");
  kb_import->fallthrough();
  kb_import->add_option("records", kb_import_args.records, "JSON Lines records to import")
      ->required();
  kb_import
      ->add_option("--kb", kb_import_args.kb,
                   "Knowledge base file (created if absent); defaults to $RANKML_KB")
      ->envname("RANKML_KB")
      ->required();

  KbStatsArgs kb_stats_args;
  CLI::App* kb_stats_cmd =
      kb->add_subcommand("stats", "Print record, dataset, and topology counts");
  kb_stats_cmd->fallthrough();
  kb_stats_cmd
      ->add_option("--kb", kb_stats_args.kb, "Knowledge base file; defaults to $RANKML_KB")
      ->envname("RANKML_KB")
      ->required();

  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train a ranking model from a knowledge base");
  train_cmd->fallthrough();
  train_cmd->add_option("--kb", train_args.kb, "Knowledge base file; defaults to $RANKML_KB")
      ->envname("RANKML_KB")
      ->required();
  train_cmd->add_option("--task", train_args.task, "Prediction task")
      ->required()
      ->check(CLI::IsMember(task_names));
  train_cmd->add_option("--metric", train_args.metric, "Score metric")
      ->required()
      ->check(CLI::IsMember(metric_names));
  train_cmd->add_option("--out", train_args.out, "Model output file")->required();
  train_cmd->add_option("--seed", train_args.seed, "Training seed");

  RankArgs rank_args;
  CLI::App* rank_cmd = app.add_subcommand(
      "rank", "Rank the knowledge base's candidate pipelines for a new dataset");
  rank_cmd->fallthrough();
  rank_cmd->add_option("--model", rank_args.model, "Trained model file")->required();
  rank_cmd->add_option("--data", rank_args.data, "Dataset file")->required();
  rank_cmd->add_option("--target", rank_args.target, "Target column name")->required();
  rank_cmd->add_option("--kb", rank_args.kb,
                       "Knowledge base supplying candidates; defaults to $RANKML_KB")
      ->envname("RANKML_KB")
      ->required();
  rank_cmd->add_option("--k", rank_args.k, "How many top candidates to print");

  EvaluateArgs evaluate_args;
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "Leave-one-out evaluation of the ranker over a knowledge base");
  evaluate_cmd->fallthrough();
  evaluate_cmd
      ->add_option("--kb", evaluate_args.kb, "Knowledge base file; defaults to $RANKML_KB")
      ->envname("RANKML_KB")
      ->required();
  evaluate_cmd->add_option("--task", evaluate_args.task, "Prediction task")
      ->required()
      ->check(CLI::IsMember(task_names));
  evaluate_cmd->add_option("--metric", evaluate_args.metric, "Score metric")
      ->required()
      ->check(CLI::IsMember(metric_names));
  evaluate_cmd->add_option("--k", evaluate_args.k, "Comma-separated top-k cutoffs")
      ->delimiter(',');
  evaluate_cmd->add_option("--seed", evaluate_args.seed, "Training seed");
  evaluate_cmd->add_option("--out", evaluate_args.out, "Also write the report here");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate a deterministic synthetic knowledge base");
  synth_cmd->fallthrough();
  synth_cmd->add_option("--datasets", synth_args.datasets, "Synthetic dataset count");
  synth_cmd->add_option("--pipelines", synth_args.pipelines, "Distinct pipeline count");
  synth_cmd->add_option("--noise", synth_args.noise, "Gaussian score noise (stddev)");
  synth_cmd->add_option("--interaction", synth_args.interaction,
                        "Dataset-regime interaction strength");
  synth_cmd->add_option("--seed", synth_args.seed, "Corpus seed");
  synth_cmd->add_option("--out", synth_args.out, "Knowledge base output file")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("rankml");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    CLI::App* deepest = &app;
    while (!deepest->get_subcommands().empty())
      deepest = deepest->get_subcommands().front();
    out << deepest->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (extract->parsed()) {
      run_extract(extract_args, out);
    } else if (encode->parsed()) {
      run_encode(encode_args, out);
    } else if (kb_import->parsed()) {
      run_kb_import(kb_import_args, out, err, verbose);
    } else if (kb_stats_cmd->parsed()) {
      run_kb_stats(kb_stats_args, out);
    } else if (train_cmd->parsed()) {
      run_train(train_args, out, err, verbose);
    } else if (rank_cmd->parsed()) {
      run_rank(rank_args, out, err);
    } else if (evaluate_cmd->parsed()) {
      run_evaluate(evaluate_args, out, err, verbose);
    } else if (synth_cmd->parsed()) {
      run_synth(synth_args, out);
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace rankml
