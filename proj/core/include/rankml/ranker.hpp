#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankml/knowledge_base.hpp"
#include "rankml/meta_features.hpp"
#include "rankml/pipeline.hpp"
#include "rankml/rng.hpp"
#include "rankml/tabular.hpp"

namespace rankml {

struct RankConfig {
  double learning_rate = 0.1;
  int max_depth = 8;
  int n_trees = 150;
  int max_pairs_per_group = 10000;
  int min_samples_leaf = 5;
  std::uint64_t seed = 0;

  bool operator==(const RankConfig&) const = default;
};

// All rows observed for one dataset; the ranking objective compares rows only
// within a group. Labels are oriented so that higher is always better.
struct TrainingGroup {
  std::string dataset_id;
  std::vector<std::vector<double>> feature_rows;
  std::vector<double> labels;
};

// Groups plus the encoding frozen from the knowledge base they came from;
// everything a model needs to score unseen candidates consistently.
struct TrainingBundle {
  std::vector<TrainingGroup> groups;
  PrimitiveVocabulary vocabulary;
  std::size_t slot_count = 0;  // L
  int mf_version = kMetaFeatureSchemaVersion;
  Task task = Task::classification;
  Metric metric = Metric::accuracy;

  std::size_t feature_width() const {
    return kMetaFeatureCount + 2 * slot_count + vocabulary.size();
  }
};

// One group per dataset_id in the (task, metric) slice, rows ordered by
// canonical pipeline sequence; labels are the stored score for accuracy and
// its negation for mse. Throws Error when the slice is empty.
TrainingBundle build_training_groups(const KnowledgeBase& kb, Task task, Metric metric);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root; rows with
                                // row[feature] <= threshold descend left

  double evaluate(std::span<const double> row) const;
  bool operator==(const RegressionTree&) const = default;
};

struct RankModel {
  std::vector<RegressionTree> trees;
  double base_score = 0.0;
  PrimitiveVocabulary vocabulary;
  std::size_t slot_count = 0;
  int mf_version = kMetaFeatureSchemaVersion;
  Task task = Task::classification;
  Metric metric = Metric::accuracy;
  RankConfig config;

  std::size_t feature_width() const {
    return kMetaFeatureCount + 2 * slot_count + vocabulary.size();
  }
  bool operator==(const RankModel&) const = default;
};

// Ordered pair (i, j) asserting labels[i] > labels[j].
using IndexPair = std::pair<std::size_t, std::size_t>;

// Deterministic enumeration of comparable pairs within one group, reservoir-
// sampled down to max_pairs when there are more. The caller owns seeding.
std::vector<IndexPair> sample_pairs(const std::vector<double>& labels,
                                    std::size_t max_pairs, SplitMix64& rng);

// First and second derivatives of the summed pairwise logistic loss
// sum log(1 + exp(-(s_i - s_j))) with respect to each score. Throws Error on
// a pair that is out of range or not label-descending.
std::pair<std::vector<double>, std::vector<double>> pairwise_gradients(
    const std::vector<double>& scores, const std::vector<double>& labels,
    const std::vector<IndexPair>& pairs);

// Total pairwise logistic loss over the given pairs (test and diagnostics aid).
double pairwise_loss(const std::vector<double>& scores,
                     const std::vector<IndexPair>& pairs);

// Gradient boosting with the pairwise objective; deterministic in
// (bundle, config). Throws Error when no group has two distinct labels.
RankModel train(const TrainingBundle& bundle, const RankConfig& config);

// base_score + learning_rate * sum of tree outputs; pure. Throws Error on a
// width mismatch.
double predict(const RankModel& model, std::span<const double> row);

// The feature row a model sees for one candidate: meta-features, then the
// encoded pipeline. Counts tokens that fall outside the model vocabulary.
std::vector<double> candidate_row(const RankModel& model, const MetaFeatureVector& mf,
                                  const PipelineGraph& candidate,
                                  std::size_t* unknown_tokens = nullptr);

struct RankedCandidate {
  std::size_t index = 0;  // position in the input candidate list
  double score = 0.0;
};

struct RankingResult {
  std::vector<RankedCandidate> ranked;  // score descending; ties broken by
                                        // canonical sequence ascending
  std::vector<std::size_t> skipped;     // candidates longer than the model's L
  std::size_t unknown_tokens = 0;
};

RankingResult rank_candidates(const RankModel& model, const MetaFeatureVector& mf,
                              const std::vector<PipelineGraph>& candidates);

// Versioned JSON persistence; load(save(m)) predicts bit-identically to m.
void model_save(const RankModel& model, const std::string& path);
RankModel model_load(const std::string& path);

}  // namespace rankml
