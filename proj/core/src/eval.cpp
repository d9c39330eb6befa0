#include "rankml/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

#include <json.hpp>

#include "pipeline_json.hpp"
#include "rankml/error.hpp"
#include "rankml/hash.hpp"
#include "rankml/rng.hpp"

namespace rankml {

namespace {

// Distinct sub-stream tags so that every random choice has its own seed
// lineage under one corpus seed.
constexpr std::uint64_t kStreamOracle = 0xA1;
constexpr std::uint64_t kStreamPipelines = 0xA2;
constexpr std::uint64_t kStreamDatasetShape = 0xA3;
constexpr std::uint64_t kStreamDatasetContent = 0xA4;
constexpr std::uint64_t kStreamNoise = 0xA5;
constexpr std::uint64_t kStreamBaseline = 0xA6;

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); 0 when fewer than two observations.
double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

AggregateStats aggregate(const std::vector<double>& v) {
  return AggregateStats{mean_of(v), sample_stddev(v)};
}

// 1-based average ranks; tied values share the mean of the positions they
// would occupy.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&values](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t at = 0;
  while (at < n) {
    std::size_t end = at + 1;
    while (end < n && values[order[end]] == values[order[at]]) ++end;
    // Positions at+1 .. end (1-based) share their mean.
    const double shared = static_cast<double>(at + 1 + end) / 2.0;
    for (std::size_t i = at; i < end; ++i) ranks[order[i]] = shared;
    at = end;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

double ndcg_at_k(const std::vector<double>& relevances, std::size_t k) {
  const std::size_t m = std::min(k, relevances.size());
  double dcg = 0.0;
  for (std::size_t p = 0; p < m; ++p)
    dcg += relevances[p] / std::log2(static_cast<double>(p) + 2.0);
  std::vector<double> ideal = relevances;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t p = 0; p < m; ++p)
    idcg += ideal[p] / std::log2(static_cast<double>(p) + 2.0);
  if (idcg == 0.0) return 1.0;
  return dcg / idcg;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw Error("spearman inputs must have equal length");
  return pearson(average_ranks(x), average_ranks(y));
}

namespace {

// Everything needed to judge a ranking for one held-out dataset.
struct FoldTruth {
  std::string dataset_id;
  MetaFeatureVector mf;
  std::vector<std::optional<double>> label;  // per candidate, higher-is-better
  double best = 0.0;
  double worst = 0.0;

  double spread() const { return best - worst; }
  double normalized(double value) const {
    return spread() > 0.0 ? (value - worst) / spread() : 1.0;
  }
};

std::vector<FoldTruth> build_truths(const KnowledgeBase& kb, Task task, Metric metric,
                                    const std::vector<PipelineGraph>& candidates) {
  std::map<std::vector<std::uint64_t>, std::size_t> candidate_index;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    candidate_index.emplace(canonical_tokens(candidates[i]), i);

  std::map<std::string, FoldTruth> by_id;
  for (const auto& [key, record] : kb.records()) {
    if (std::get<1>(key) != task || std::get<2>(key) != metric) continue;
    FoldTruth& t = by_id[std::get<0>(key)];
    if (t.label.empty()) {
      t.dataset_id = std::get<0>(key);
      t.mf = record.meta_features;
      t.label.assign(candidates.size(), std::nullopt);
    }
    const double label = higher_is_better(metric) ? record.score : -record.score;
    t.label[candidate_index.at(std::get<3>(key))] = label;
  }
  std::vector<FoldTruth> out;
  out.reserve(by_id.size());
  for (auto& [id, t] : by_id) {
    bool first = true;
    for (const std::optional<double>& l : t.label) {
      if (!l.has_value()) continue;
      if (first || *l > t.best) t.best = *l;
      if (first || *l < t.worst) t.worst = *l;
      first = false;
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Top-k metrics over a ranking, skipping candidates without a stored score.
void score_ranking(const FoldTruth& truth, const std::vector<std::size_t>& ranking,
                   const std::vector<int>& k_list, FoldReport& fold) {
  std::vector<double> relevances;  // normalized labels in predicted order
  std::vector<double> raw_labels;
  relevances.reserve(truth.label.size());
  for (const std::size_t idx : ranking) {
    const std::optional<double>& l = truth.label[idx];
    if (!l.has_value()) continue;
    raw_labels.push_back(*l);
    relevances.push_back(truth.normalized(*l));
  }
  fold.truth_count = raw_labels.size();
  fold.best_label = truth.best;

  for (const int k : k_list) {
    const std::size_t kk = static_cast<std::size_t>(k);
    if (raw_labels.empty()) {
      fold.achieved_at_k[k] = truth.worst;
      fold.regret_at_k[k] = truth.spread() > 0.0 ? 1.0 : 0.0;
      fold.ndcg_at_k[k] = 0.0;
      continue;
    }
    double achieved = raw_labels[0];
    for (std::size_t p = 1; p < std::min(kk, raw_labels.size()); ++p)
      achieved = std::max(achieved, raw_labels[p]);
    fold.achieved_at_k[k] = achieved;
    fold.regret_at_k[k] = 1.0 - truth.normalized(achieved);
    fold.ndcg_at_k[k] = ndcg_at_k(relevances, kk);
  }

  // Predicted position (reversed so larger means better) against true labels.
  std::vector<double> predicted_order(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size(); ++i)
    predicted_order[i] = static_cast<double>(raw_labels.size() - i);
  fold.spearman = raw_labels.size() >= 2 ? spearman_rho(predicted_order, raw_labels) : 0.0;
}

void check_k_list(const std::vector<int>& k_list) {
  if (k_list.empty()) throw Error("k list must be non-empty");
  for (const int k : k_list)
    if (k < 1) throw Error("every k must be at least 1");
}

}  // namespace

LooReport loo_evaluate(const KnowledgeBase& kb, Task task, Metric metric,
                       const RankConfig& config, const std::vector<int>& k_list) {
  check_k_list(k_list);
  const std::vector<std::string> ids = kb.dataset_ids(task, metric);
  if (ids.size() < 3)
    throw Error("leave-one-out evaluation needs at least 3 datasets, found " +
                std::to_string(ids.size()));

  LooReport report;
  report.task = task;
  report.metric = metric;
  report.k_list = k_list;
  report.candidates = kb.candidates(task, metric);
  const std::vector<FoldTruth> truths = build_truths(kb, task, metric, report.candidates);

  for (const FoldTruth& truth : truths) {
    KnowledgeBase training;
    for (const auto& [key, record] : kb.records()) {
      if (std::get<1>(key) != task || std::get<2>(key) != metric) continue;
      if (std::get<0>(key) == truth.dataset_id) continue;
      training.insert(record);
    }
    const TrainingBundle bundle = build_training_groups(training, task, metric);
    const RankModel model = train(bundle, config);
    const RankingResult ranking = rank_candidates(model, truth.mf, report.candidates);

    FoldReport fold;
    fold.dataset_id = truth.dataset_id;
    fold.ranking.reserve(ranking.ranked.size());
    for (const RankedCandidate& rc : ranking.ranked) fold.ranking.push_back(rc.index);
    score_ranking(truth, fold.ranking, k_list, fold);
    report.folds.push_back(std::move(fold));
  }

  for (const int k : k_list) {
    std::vector<double> regrets, ndcgs;
    for (const FoldReport& fold : report.folds) {
      regrets.push_back(fold.regret_at_k.at(k));
      ndcgs.push_back(fold.ndcg_at_k.at(k));
    }
    report.regret_at_k[k] = aggregate(regrets);
    report.ndcg_at_k[k] = aggregate(ndcgs);
  }
  std::vector<double> spearmans;
  for (const FoldReport& fold : report.folds) spearmans.push_back(fold.spearman);
  report.spearman = aggregate(spearmans);
  return report;
}

std::string loo_report_to_json_text(const LooReport& report) {
  nlohmann::json j;
  j["task"] = std::string(task_name(report.task));
  j["metric"] = std::string(metric_name(report.metric));
  j["k"] = report.k_list;

  nlohmann::json candidates = nlohmann::json::array();
  for (const PipelineGraph& g : report.candidates)
    candidates.push_back(emitted_names(g));
  j["candidates"] = std::move(candidates);

  nlohmann::json folds = nlohmann::json::array();
  for (const FoldReport& fold : report.folds) {
    nlohmann::json f;
    f["dataset_id"] = fold.dataset_id;
    f["ranking"] = fold.ranking;
    f["truth_count"] = fold.truth_count;
    f["best_label"] = fold.best_label;
    nlohmann::json per_k = nlohmann::json::object();
    for (const int k : report.k_list) {
      nlohmann::json entry;
      entry["achieved"] = fold.achieved_at_k.at(k);
      entry["regret"] = fold.regret_at_k.at(k);
      entry["ndcg"] = fold.ndcg_at_k.at(k);
      per_k[std::to_string(k)] = std::move(entry);
    }
    f["at_k"] = std::move(per_k);
    f["spearman"] = fold.spearman;
    folds.push_back(std::move(f));
  }
  j["folds"] = std::move(folds);

  nlohmann::json agg;
  nlohmann::json per_k = nlohmann::json::object();
  for (const int k : report.k_list) {
    nlohmann::json entry;
    entry["regret_mean"] = report.regret_at_k.at(k).mean;
    entry["regret_stddev"] = report.regret_at_k.at(k).stddev;
    entry["ndcg_mean"] = report.ndcg_at_k.at(k).mean;
    entry["ndcg_stddev"] = report.ndcg_at_k.at(k).stddev;
    per_k[std::to_string(k)] = std::move(entry);
  }
  agg["at_k"] = std::move(per_k);
  agg["spearman_mean"] = report.spearman.mean;
  agg["spearman_stddev"] = report.spearman.stddev;
  j["aggregates"] = std::move(agg);
  return j.dump();
}

std::vector<std::vector<double>> random_ranking_regret(
    const KnowledgeBase& kb, Task task, Metric metric, int k,
    const std::vector<std::uint64_t>& seeds) {
  if (k < 1) throw Error("k must be at least 1");
  const std::vector<PipelineGraph> candidates = kb.candidates(task, metric);
  if (candidates.empty())
    throw Error("knowledge base holds no records for task '" +
                std::string(task_name(task)) + "' and metric '" +
                std::string(metric_name(metric)) + "'");
  const std::vector<FoldTruth> truths = build_truths(kb, task, metric, candidates);

  std::vector<std::vector<double>> regret(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    regret[s].reserve(truths.size());
    for (const FoldTruth& truth : truths) {
      const std::vector<std::size_t> order = shuffled_indices(
          candidates.size(),
          mix_seed(seeds[s], xxh64(truth.dataset_id), kStreamBaseline));
      double achieved = truth.worst;
      bool any = false;
      std::size_t taken = 0;
      for (const std::size_t idx : order) {
        if (taken == static_cast<std::size_t>(k)) break;
        const std::optional<double>& l = truth.label[idx];
        if (!l.has_value()) continue;
        achieved = any ? std::max(achieved, *l) : *l;
        any = true;
        ++taken;
      }
      regret[s].push_back(any || truth.spread() == 0.0
                              ? 1.0 - truth.normalized(achieved)
                              : 1.0);
    }
  }
  return regret;
}

BocCounts boc_compare(const std::vector<double>& scores_a,
                      const std::vector<double>& scores_b, double epsilon,
                      Direction direction) {
  if (scores_a.size() != scores_b.size())
    throw Error("score lists must have equal length");
  if (epsilon < 0.0) throw Error("epsilon must be non-negative");
  BocCounts counts;
  for (std::size_t i = 0; i < scores_a.size(); ++i) {
    const double a = scores_a[i];
    const double b = scores_b[i];
    if (std::abs(a - b) <= epsilon) {
      ++counts.draws;
    } else if ((direction == Direction::higher_better) == (a > b)) {
      ++counts.a_wins;
    } else {
      ++counts.b_wins;
    }
  }
  return counts;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs, Alternative alt) {
  std::vector<double> d;
  d.reserve(diffs.size());
  for (const double x : diffs) {
    if (!std::isfinite(x)) throw Error("differences must be finite");
    if (x != 0.0) d.push_back(x);
  }
  const std::size_t n = d.size();
  if (n < 5)
    throw Error("signed-rank test needs at least 5 non-zero differences, found " +
                std::to_string(n));

  std::vector<double> magnitudes(n);
  for (std::size_t i = 0; i < n; ++i) magnitudes[i] = std::abs(d[i]);
  const std::vector<double> ranks = average_ranks(magnitudes);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0.0) w_plus += ranks[i];
  const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
  const double w_minus = total - w_plus;

  WilcoxonResult result;
  result.statistic = std::min(w_plus, w_minus);
  result.n_used = n;

  if (n <= 20) {
    result.exact = true;
    // Average ranks are multiples of 1/2; doubling them makes every subset
    // sum an exact integer, so the null distribution is a plain convolution.
    std::vector<std::size_t> doubled(n);
    std::size_t sum2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
      sum2 += doubled[i];
    }
    std::vector<std::uint64_t> count(sum2 + 1, 0);
    count[0] = 1;
    for (const std::size_t r : doubled)
      for (std::size_t t = sum2; t >= r; --t) count[t] += count[t - r];

    const std::uint64_t denom = std::uint64_t{1} << n;
    const std::size_t observed = static_cast<std::size_t>(std::llround(2.0 * w_plus));
    std::uint64_t at_or_above = 0, at_or_below = 0;
    for (std::size_t t = 0; t <= sum2; ++t) {
      if (t >= observed) at_or_above += count[t];
      if (t <= observed) at_or_below += count[t];
    }
    const double p_ge = static_cast<double>(at_or_above) / static_cast<double>(denom);
    const double p_le = static_cast<double>(at_or_below) / static_cast<double>(denom);
    switch (alt) {
      case Alternative::greater: result.p_value = p_ge; break;
      case Alternative::less: result.p_value = p_le; break;
      case Alternative::two_sided:
        result.p_value = std::min(1.0, 2.0 * std::min(p_ge, p_le));
        break;
    }
    return result;
  }

  // Normal approximation with tie correction and 0.5 continuity correction.
  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<double> sorted = magnitudes;
    std::sort(sorted.begin(), sorted.end());
    std::size_t at = 0;
    while (at < sorted.size()) {
      std::size_t end = at + 1;
      while (end < sorted.size() && sorted[end] == sorted[at]) ++end;
      const double t = static_cast<double>(end - at);
      tie_term += t * t * t - t;
      at = end;
    }
  }
  const double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (variance <= 0.0) {
    result.p_value = 1.0;
    return result;
  }
  const double sigma = std::sqrt(variance);
  const double p_ge = 1.0 - phi((w_plus - 0.5 - mu) / sigma);
  const double p_le = phi((w_plus + 0.5 - mu) / sigma);
  switch (alt) {
    case Alternative::greater: result.p_value = p_ge; break;
    case Alternative::less: result.p_value = p_le; break;
    case Alternative::two_sided:
      result.p_value = std::min(1.0, 2.0 * std::min(p_ge, p_le));
      break;
  }
  return result;
}

std::vector<PrimitiveFrequency> primitive_frequency(
    const std::vector<PipelineGraph>& top_pipelines) {
  std::map<std::string, PrimitiveFrequency> counts;
  std::size_t total = 0;
  for (const PipelineGraph& g : top_pipelines) {
    for (const Primitive& p : g.nodes) {
      PrimitiveFrequency& entry = counts[p.name];
      if (entry.occurrences == 0) {
        entry.name = p.name;
        entry.family = p.family;
      }
      ++entry.occurrences;
      ++total;
    }
  }
  std::vector<PrimitiveFrequency> out;
  out.reserve(counts.size());
  for (auto& [name, entry] : counts) {
    entry.fraction = static_cast<double>(entry.occurrences) / static_cast<double>(total);
    out.push_back(std::move(entry));
  }
  std::sort(out.begin(), out.end(),
            [](const PrimitiveFrequency& a, const PrimitiveFrequency& b) {
              if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
              return a.name < b.name;
            });
  return out;
}

namespace {

struct SyntheticPrimitive {
  std::string_view name;
  PrimitiveFamily family;
};

// 30 primitives across the four working families.
constexpr SyntheticPrimitive kSyntheticPrimitives[] = {
    {"Binarizer", PrimitiveFamily::data_preprocessing},
    {"Imputer", PrimitiveFamily::data_preprocessing},
    {"MaxAbsScaler", PrimitiveFamily::data_preprocessing},
    {"MinMaxScaler", PrimitiveFamily::data_preprocessing},
    {"Normalizer", PrimitiveFamily::data_preprocessing},
    {"QuantileTransformer", PrimitiveFamily::data_preprocessing},
    {"RobustScaler", PrimitiveFamily::data_preprocessing},
    {"StandardScaler", PrimitiveFamily::data_preprocessing},
    {"FastICA", PrimitiveFamily::feature_preprocessing},
    {"PCA", PrimitiveFamily::feature_preprocessing},
    {"RFE", PrimitiveFamily::feature_preprocessing},
    {"SelectKBest", PrimitiveFamily::feature_preprocessing},
    {"SelectPercentile", PrimitiveFamily::feature_preprocessing},
    {"TruncatedSVD", PrimitiveFamily::feature_preprocessing},
    {"VarianceThreshold", PrimitiveFamily::feature_preprocessing},
    {"CombineDFs", PrimitiveFamily::feature_engineering},
    {"FeatureAgglomeration", PrimitiveFamily::feature_engineering},
    {"Nystroem", PrimitiveFamily::feature_engineering},
    {"OneHotEncoder", PrimitiveFamily::feature_engineering},
    {"PolynomialFeatures", PrimitiveFamily::feature_engineering},
    {"RBFSampler", PrimitiveFamily::feature_engineering},
    {"ZeroCount", PrimitiveFamily::feature_engineering},
    {"BernoulliNB", PrimitiveFamily::predictive_model},
    {"DecisionTreeClassifier", PrimitiveFamily::predictive_model},
    {"GaussianNB", PrimitiveFamily::predictive_model},
    {"GradientBoostingClassifier", PrimitiveFamily::predictive_model},
    {"KNeighborsClassifier", PrimitiveFamily::predictive_model},
    {"LinearSVC", PrimitiveFamily::predictive_model},
    {"LogisticRegression", PrimitiveFamily::predictive_model},
    {"RandomForestClassifier", PrimitiveFamily::predictive_model},
};

constexpr double kRegimeRowThreshold = 180.0;

}  // namespace

SyntheticOracle::SyntheticOracle(std::uint64_t seed, double interaction_strength) {
  SplitMix64 rng(mix_seed(seed, kStreamOracle));
  for (const SyntheticPrimitive& p : kSyntheticPrimitives) {
    const double base = rng.next_uniform(-1.0, 1.0);
    const double shift = interaction_strength * rng.next_uniform(-0.7, 0.7);
    base_weight_.emplace(std::string(p.name), base);
    regime_shift_.emplace(std::string(p.name), shift);
  }
}

bool SyntheticOracle::large_regime(const MetaFeatureVector& mf) {
  return mf.values[kMfRows] >= kRegimeRowThreshold;
}

double SyntheticOracle::score(const MetaFeatureVector& mf,
                              const PipelineGraph& pipeline) const {
  const bool large = large_regime(mf);
  double z = 0.0;
  for (const Primitive& node : pipeline.nodes) {
    if (node.family == PrimitiveFamily::special) continue;
    const auto base = base_weight_.find(node.name);
    if (base == base_weight_.end()) continue;  // outside the synthetic vocabulary
    z += base->second;
    if (large) z += regime_shift_.at(node.name);
  }
  return 1.0 / (1.0 + std::exp(-z / 3.0));
}

TabularDataset synthetic_dataset(std::uint64_t seed, std::size_t n_rows,
                                 std::size_t n_numeric, std::size_t n_categorical) {
  if (n_rows < 2) throw Error("synthetic dataset needs at least 2 rows");
  SplitMix64 rng(seed);

  std::vector<double> latent(n_rows);
  for (double& z : latent) z = rng.next_gaussian(1.0);

  TabularDataset d;
  d.name = "synthetic";
  d.task = Task::classification;

  for (std::size_t j = 0; j < n_numeric; ++j) {
    Column col;
    col.name = "num_" + std::to_string(j);
    col.kind = ColumnKind::numeric;
    col.numbers.resize(n_rows);
    const double loading = rng.next_uniform(-1.0, 1.0);
    const double noise = rng.next_uniform(0.2, 1.2);
    const double offset = rng.next_uniform(-5.0, 5.0);
    const double scale = rng.next_uniform(0.5, 3.0);
    const double missing_rate = rng.next_uniform(0.0, 0.15);
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (rng.next_unit() < missing_rate) continue;  // leave missing
      col.numbers[r] = offset + scale * (loading * latent[r] + rng.next_gaussian(noise));
    }
    d.columns.push_back(std::move(col));
  }
  for (std::size_t j = 0; j < n_categorical; ++j) {
    Column col;
    col.name = "cat_" + std::to_string(j);
    col.kind = ColumnKind::categorical;
    col.labels.resize(n_rows);
    const std::uint64_t cardinality = 2 + rng.next_below(5);
    const double missing_rate = rng.next_uniform(0.0, 0.10);
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (rng.next_unit() < missing_rate) continue;
      col.labels[r] = "v" + std::to_string(rng.next_below(cardinality));
    }
    d.columns.push_back(std::move(col));
  }
  {
    Column target;
    target.name = "target";
    target.kind = ColumnKind::categorical;
    target.labels.resize(n_rows);
    const std::uint64_t classes = 2 + rng.next_below(3);
    for (std::size_t r = 0; r < n_rows; ++r) {
      // Couple the class mildly to the latent factor so correlations exist.
      const std::uint64_t pick = rng.next_unit() < 0.6 && latent[r] > 0.0
                                     ? 0
                                     : rng.next_below(classes);
      target.labels[r] = "class_" + std::to_string(pick);
    }
    d.columns.push_back(std::move(target));
  }
  d.n_rows = n_rows;
  d.target_index = d.columns.size() - 1;
  return d;
}

namespace {

PipelineGraph random_pipeline(SplitMix64& rng) {
  constexpr std::size_t kModelBegin = 22;  // predictive models in the table above
  constexpr std::size_t kModelEnd = 30;
  const std::size_t m = 2 + rng.next_below(7);  // 2..8 nodes

  // Random recursive tree rooted at the sink; node 0 is the predictive model,
  // interior nodes are working primitives, leaves are data markers.
  std::vector<std::size_t> parent(m, 0);
  for (std::size_t k = 1; k < m; ++k) parent[k] = rng.next_below(k);
  std::vector<bool> has_child(m, false);
  for (std::size_t k = 1; k < m; ++k) has_child[parent[k]] = true;

  PipelineGraph g;
  g.nodes.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (k == 0) {
      const std::size_t pick = kModelBegin + rng.next_below(kModelEnd - kModelBegin);
      g.nodes.push_back(make_primitive(std::string(kSyntheticPrimitives[pick].name),
                                       kSyntheticPrimitives[pick].family));
    } else if (has_child[k]) {
      const std::size_t pick = rng.next_below(kModelBegin);
      g.nodes.push_back(make_primitive(std::string(kSyntheticPrimitives[pick].name),
                                       kSyntheticPrimitives[pick].family));
    } else {
      g.nodes.push_back(data_primitive());
    }
  }
  for (std::size_t k = 1; k < m; ++k) g.edges.emplace_back(k, parent[k]);
  return g;
}

std::string synthetic_dataset_id(std::size_t index) {
  std::string digits = std::to_string(index);
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  return "synth-" + digits;
}

}  // namespace

SyntheticCorpus generate_synthetic_kb(const OracleConfig& cfg) {
  if (cfg.n_datasets < 2) throw Error("need at least 2 synthetic datasets");
  if (cfg.n_pipelines < 2) throw Error("need at least 2 synthetic pipelines");
  if (cfg.noise_std < 0.0) throw Error("noise_std must be non-negative");

  SyntheticCorpus corpus;
  corpus.oracle = SyntheticOracle(cfg.seed, cfg.interaction_strength);

  SplitMix64 prng(mix_seed(cfg.seed, kStreamPipelines));
  std::set<std::vector<std::uint64_t>> seen;
  std::size_t attempts = 0;
  const std::size_t attempt_limit = 200 * cfg.n_pipelines + 1000;
  while (corpus.pipelines.size() < cfg.n_pipelines && attempts < attempt_limit) {
    ++attempts;
    PipelineGraph g = random_pipeline(prng);
    if (seen.insert(canonical_tokens(g)).second) corpus.pipelines.push_back(std::move(g));
  }
  if (corpus.pipelines.size() < cfg.n_pipelines)
    throw Error("could not generate " + std::to_string(cfg.n_pipelines) +
                " distinct pipelines");

  for (std::size_t i = 0; i < cfg.n_datasets; ++i) {
    SplitMix64 shape(mix_seed(cfg.seed, kStreamDatasetShape, i));
    const bool large = i % 2 == 1;
    const std::size_t n_rows = large ? 200 + shape.next_below(201)   // 200..400
                                     : 40 + shape.next_below(121);   // 40..160
    const std::size_t n_numeric = 3 + shape.next_below(8);
    const std::size_t n_categorical = 1 + shape.next_below(3);
    TabularDataset d = synthetic_dataset(mix_seed(cfg.seed, kStreamDatasetContent, i),
                                         n_rows, n_numeric, n_categorical);
    d.name = synthetic_dataset_id(i);
    const MetaFeatureVector mf = extract_meta_features(d);

    for (std::size_t j = 0; j < corpus.pipelines.size(); ++j) {
      const double truth = corpus.oracle.score(mf, corpus.pipelines[j]);
      double noise = 0.0;
      if (cfg.noise_std > 0.0) {
        SplitMix64 nrng(mix_seed(cfg.seed ^ kStreamNoise, i, j));
        noise = nrng.next_gaussian(cfg.noise_std);
      }
      PerformanceRecord r;
      r.dataset_id = d.name;
      r.task = Task::classification;
      r.metric = Metric::accuracy;
      r.pipeline = corpus.pipelines[j];
      r.score = std::clamp(truth + noise, 0.0, 1.0);
      r.meta_features = mf;
      corpus.kb.insert(std::move(r));
    }
    corpus.datasets.push_back(std::move(d));
  }
  return corpus;
}

}  // namespace rankml
