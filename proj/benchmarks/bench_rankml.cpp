#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "rankml/eval.hpp"
#include "rankml/meta_features.hpp"
#include "rankml/pipeline.hpp"
#include "rankml/ranker.hpp"
#include "rankml/tabular.hpp"

namespace {

using namespace rankml;

PipelineGraph branching_pipeline() {
  PipelineGraph g;
  g.nodes = {make_primitive("Combiner", PrimitiveFamily::predictive_model),
             make_primitive("Primitive3", PrimitiveFamily::feature_engineering),
             make_primitive("Primitive2", PrimitiveFamily::feature_preprocessing),
             data_primitive(),
             make_primitive("Primitive1", PrimitiveFamily::data_preprocessing),
             data_primitive()};
  g.edges = {{1, 0}, {2, 1}, {3, 2}, {4, 0}, {5, 4}};
  return g;
}

struct OnlineFixture {
  SyntheticCorpus corpus;
  RankModel model;
  std::vector<PipelineGraph> candidates;
  TabularDataset query;
  MetaFeatureVector query_mf;
  std::vector<double> row;

  OnlineFixture() {
    OracleConfig cfg;
    cfg.n_datasets = 4;
    cfg.n_pipelines = 1000;
    cfg.seed = 2;
    corpus = generate_synthetic_kb(cfg);
    RankConfig config;
    config.n_trees = 150;
    model = train(
        build_training_groups(corpus.kb, Task::classification, Metric::accuracy),
        config);
    candidates = corpus.kb.candidates(Task::classification, Metric::accuracy);
    query = synthetic_dataset(11, 10000, 15, 5);
    query_mf = extract_meta_features(query);
    row = candidate_row(model, query_mf, candidates.front());
  }
};

const OnlineFixture& online() {
  static const OnlineFixture fixture;
  return fixture;
}

void BM_EncodePipeline(benchmark::State& state) {
  const PipelineGraph g = branching_pipeline();
  for (auto _ : state) {
    PipelineSequence seq = encode_pipeline(g, 8);
    benchmark::DoNotOptimize(seq.tokens.data());
  }
}
BENCHMARK(BM_EncodePipeline);

void BM_ExtractMetaFeatures_10kRows(benchmark::State& state) {
  const TabularDataset& d = online().query;
  for (auto _ : state) {
    MetaFeatureVector mf = extract_meta_features(d);
    benchmark::DoNotOptimize(mf.values.data());
  }
}
BENCHMARK(BM_ExtractMetaFeatures_10kRows);

void BM_Predict(benchmark::State& state) {
  const OnlineFixture& f = online();
  for (auto _ : state) {
    double score = predict(f.model, f.row);
    benchmark::DoNotOptimize(score);
  }
}
BENCHMARK(BM_Predict);

void BM_RankCandidates_1000(benchmark::State& state) {
  const OnlineFixture& f = online();
  for (auto _ : state) {
    RankingResult result = rank_candidates(f.model, f.query_mf, f.candidates);
    benchmark::DoNotOptimize(result.ranked.data());
  }
}
BENCHMARK(BM_RankCandidates_1000);

}  // namespace

BENCHMARK_MAIN();
