#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rankml/knowledge_base.hpp"
#include "rankml/meta_features.hpp"
#include "rankml/pipeline.hpp"
#include "rankml/ranker.hpp"
#include "rankml/tabular.hpp"

namespace rankml {

// --- rank-quality metrics -------------------------------------------------

// Relevances listed in predicted order; gain is the raw relevance, the
// position-p discount is log2(p + 1), and the result is normalized by the
// ideal ordering. Defined as 1.0 when the ideal DCG is zero.
double ndcg_at_k(const std::vector<double>& relevances, std::size_t k);

// Rank correlation: Pearson correlation of average ranks (ties share the mean
// of the positions they occupy). Returns 0 when either side has no variance.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// --- leave-one-out evaluation ----------------------------------------------

struct FoldReport {
  std::string dataset_id;
  std::vector<std::size_t> ranking;       // candidate indices, best first
  std::size_t truth_count = 0;            // ranked candidates with a stored score
  double best_label = 0.0;                // best stored label (higher-is-better space)
  std::map<int, double> achieved_at_k;    // best stored label inside the top k
  std::map<int, double> regret_at_k;      // 1 - normalized achieved; in [0, 1]
  std::map<int, double> ndcg_at_k;
  double spearman = 0.0;
};

struct AggregateStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds
};

struct LooReport {
  Task task = Task::classification;
  Metric metric = Metric::accuracy;
  std::vector<int> k_list;
  std::vector<PipelineGraph> candidates;  // the shared candidate set
  std::vector<FoldReport> folds;          // one per dataset, id-sorted
  std::map<int, AggregateStats> regret_at_k;
  std::map<int, AggregateStats> ndcg_at_k;
  AggregateStats spearman;
};

// For every dataset d in the (task, metric) slice: train a model on all other
// datasets, rank the full candidate set for d, then score the ranking against
// d's stored records. Top-k metrics skip candidates without a stored score;
// regret and NDCG relevances use labels min-max normalized within the fold.
// Requires at least 3 datasets.
LooReport loo_evaluate(const KnowledgeBase& kb, Task task, Metric metric,
                       const RankConfig& config, const std::vector<int>& k_list);

std::string loo_report_to_json_text(const LooReport& report);

// Mean normalized regret@k per fold under a uniformly random ranking of the
// same candidates; result[s][f] is fold f's regret under seeds[s].
std::vector<std::vector<double>> random_ranking_regret(
    const KnowledgeBase& kb, Task task, Metric metric, int k,
    const std::vector<std::uint64_t>& seeds);

// --- method comparison ------------------------------------------------------

enum class Direction { higher_better, lower_better };

struct BocCounts {
  std::size_t a_wins = 0;
  std::size_t b_wins = 0;
  std::size_t draws = 0;

  std::size_t boc_a() const { return a_wins + draws; }
  std::size_t boc_b() const { return b_wins + draws; }
};

// Per paired observation: a draw when |a - b| <= epsilon, otherwise a win for
// the better side under `direction`.
BocCounts boc_compare(const std::vector<double>& scores_a,
                      const std::vector<double>& scores_b, double epsilon,
                      Direction direction);

enum class Alternative { two_sided, greater, less };

struct WilcoxonResult {
  double statistic = 0.0;  // W = min(W+, W-)
  double p_value = 1.0;
  std::size_t n_used = 0;  // non-zero differences entering the test
  bool exact = false;      // enumeration (n <= 20) vs normal approximation
};

// Signed-rank test on paired differences. Zeros are dropped; ties in |diff|
// receive average ranks. `greater` tests for a positive median difference.
// Requires at least 5 non-zero differences.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs, Alternative alt);

// --- recommendation diversity ----------------------------------------------

struct PrimitiveFrequency {
  std::string name;
  PrimitiveFamily family = PrimitiveFamily::special;
  std::size_t occurrences = 0;
  double fraction = 0.0;  // of all primitive occurrences across the pipelines
};

// Counts every node occurrence across the given pipelines (typically the
// top-ranked pipeline of each evaluation fold); sorted by fraction descending,
// name ascending.
std::vector<PrimitiveFrequency> primitive_frequency(
    const std::vector<PipelineGraph>& top_pipelines);

// --- synthetic corpus -------------------------------------------------------

struct OracleConfig {
  std::size_t n_datasets = 30;
  std::size_t n_pipelines = 200;
  double noise_std = 0.0;
  std::uint64_t seed = 1;
  // Weight of the dataset-regime x primitive affinity terms; 0 makes the
  // true score a pure linear function of the pipeline's primitive counts.
  double interaction_strength = 1.0;
};

// Noise-free ground truth: a score in (0, 1) driven by which primitives a
// pipeline uses and by the dataset's size regime (small vs large row count,
// visible to models through the row-count meta-feature).
class SyntheticOracle {
 public:
  SyntheticOracle() = default;
  SyntheticOracle(std::uint64_t seed, double interaction_strength);

  double score(const MetaFeatureVector& mf, const PipelineGraph& pipeline) const;

  // The regime indicator derived from the row-count meta-feature.
  static bool large_regime(const MetaFeatureVector& mf);

 private:
  std::map<std::string, double> base_weight_;
  std::map<std::string, double> regime_shift_;
};

struct SyntheticCorpus {
  KnowledgeBase kb;
  SyntheticOracle oracle;
  std::vector<TabularDataset> datasets;
  std::vector<PipelineGraph> pipelines;
};

// Deterministic desk-scale corpus: synthetic classification datasets with
// varied shapes, missingness, and correlation structure; random valid
// pipelines (2..8 nodes) over a 30-primitive vocabulary; stored accuracy =
// oracle score plus clamped gaussian noise.
SyntheticCorpus generate_synthetic_kb(const OracleConfig& cfg);

// One synthetic classification dataset; exposed for extraction tests and
// benchmarks that need realistic tabular inputs of a chosen size.
TabularDataset synthetic_dataset(std::uint64_t seed, std::size_t n_rows,
                                 std::size_t n_numeric, std::size_t n_categorical);

}  // namespace rankml
