#include "rankml/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rankml/error.hpp"
#include "rankml/hash.hpp"

namespace rankml {

namespace {

constexpr double kHessianFloor = 1e-6;
constexpr double kLeafRegularizer = 1.0;
constexpr double kMinSplitGain = 1e-12;
constexpr int kModelFormatVersion = 1;

void check_config(const RankConfig& c) {
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate))
    throw Error("learning_rate must be positive");
  if (c.max_depth < 1) throw Error("max_depth must be at least 1");
  if (c.n_trees < 1) throw Error("n_trees must be at least 1");
  if (c.max_pairs_per_group < 1) throw Error("max_pairs_per_group must be at least 1");
  if (c.min_samples_leaf < 1) throw Error("min_samples_leaf must be at least 1");
}

// sigma(-(s_i - s_j)) computed from d = s_i - s_j; saturates cleanly at the
// extremes instead of producing NaN.
double pair_sigma(double d) { return 1.0 / (1.0 + std::exp(d)); }

double stable_log1p_exp(double x) {
  // log(1 + exp(x)) without overflow for large positive x.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

double RegressionTree::evaluate(std::span<const double> row) const {
  if (nodes.empty()) throw Error("cannot evaluate an empty tree");
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const TreeNode& n = nodes[at];
    at = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold
                                      ? n.left
                                      : n.right);
  }
  return nodes[at].value;
}

TrainingBundle build_training_groups(const KnowledgeBase& kb, Task task, Metric metric) {
  std::vector<PipelineGraph> pipelines = kb.candidates(task, metric);
  if (pipelines.empty())
    throw Error("knowledge base holds no records for task '" +
                std::string(task_name(task)) + "' and metric '" +
                std::string(metric_name(metric)) + "'");

  TrainingBundle bundle;
  bundle.task = task;
  bundle.metric = metric;
  bundle.mf_version = kMetaFeatureSchemaVersion;
  bundle.slot_count = max_pipeline_length(pipelines);
  bundle.vocabulary = PrimitiveVocabulary::from_pipelines(pipelines);

  // records() iterates in key order, so rows arrive grouped by dataset_id and
  // sorted by canonical sequence within each group.
  TrainingGroup* current = nullptr;
  for (const auto& [key, record] : kb.records()) {
    if (std::get<1>(key) != task || std::get<2>(key) != metric) continue;
    const std::string& dataset_id = std::get<0>(key);
    if (current == nullptr || current->dataset_id != dataset_id) {
      bundle.groups.push_back(TrainingGroup{dataset_id, {}, {}});
      current = &bundle.groups.back();
    }
    const PipelineSequence seq = encode_pipeline(record.pipeline, bundle.slot_count);
    std::vector<double> row(record.meta_features.values.begin(),
                            record.meta_features.values.end());
    const std::vector<double> encoded = featurize_sequence(seq, bundle.vocabulary);
    row.insert(row.end(), encoded.begin(), encoded.end());
    current->feature_rows.push_back(std::move(row));
    current->labels.push_back(higher_is_better(metric) ? record.score : -record.score);
  }
  return bundle;
}

std::vector<IndexPair> sample_pairs(const std::vector<double>& labels,
                                    std::size_t max_pairs, SplitMix64& rng) {
  std::vector<IndexPair> reservoir;
  if (max_pairs == 0) return reservoir;
  reservoir.reserve(std::min<std::size_t>(max_pairs, labels.size() * 4));
  std::size_t seen = 0;
  for (std::size_t a = 0; a < labels.size(); ++a) {
    for (std::size_t b = a + 1; b < labels.size(); ++b) {
      if (labels[a] == labels[b]) continue;
      const IndexPair pair = labels[a] > labels[b] ? IndexPair{a, b} : IndexPair{b, a};
      if (reservoir.size() < max_pairs) {
        reservoir.push_back(pair);
      } else {
        const std::uint64_t slot = rng.next_below(seen + 1);
        if (slot < max_pairs) reservoir[static_cast<std::size_t>(slot)] = pair;
      }
      ++seen;
    }
  }
  return reservoir;
}

std::pair<std::vector<double>, std::vector<double>> pairwise_gradients(
    const std::vector<double>& scores, const std::vector<double>& labels,
    const std::vector<IndexPair>& pairs) {
  if (scores.size() != labels.size())
    throw Error("scores and labels must have equal length");
  std::vector<double> gradient(scores.size(), 0.0);
  std::vector<double> hessian(scores.size(), 0.0);
  for (const auto& [i, j] : pairs) {
    if (i >= scores.size() || j >= scores.size())
      throw Error("pair index out of range");
    if (!(labels[i] > labels[j]))
      throw Error("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                  ") is not label-descending");
    const double sig = pair_sigma(scores[i] - scores[j]);
    gradient[i] -= sig;
    gradient[j] += sig;
    const double curv = sig * (1.0 - sig);
    hessian[i] += curv;
    hessian[j] += curv;
  }
  return {std::move(gradient), std::move(hessian)};
}

double pairwise_loss(const std::vector<double>& scores,
                     const std::vector<IndexPair>& pairs) {
  double total = 0.0;
  for (const auto& [i, j] : pairs) {
    if (i >= scores.size() || j >= scores.size())
      throw Error("pair index out of range");
    total += stable_log1p_exp(-(scores[i] - scores[j]));
  }
  return total;
}

namespace {

// Level-wise exact-threshold tree growth over a fixed row set. Columns and
// per-feature sort orders are shared across all boosting rounds; fit() is
// called once per round with fresh targets.
class TreeBuilder {
 public:
  TreeBuilder(std::vector<std::vector<double>> columns, const RankConfig& config)
      : columns_(std::move(columns)), config_(config) {
    const std::size_t width = columns_.size();
    n_ = width == 0 ? 0 : columns_[0].size();
    sorted_.resize(width);
    for (std::size_t f = 0; f < width; ++f) {
      std::vector<std::uint32_t>& order = sorted_[f];
      order.resize(n_);
      for (std::size_t r = 0; r < n_; ++r) order[r] = static_cast<std::uint32_t>(r);
      const std::vector<double>& column = columns_[f];
      std::sort(order.begin(), order.end(),
                [&column](std::uint32_t a, std::uint32_t b) {
                  if (column[a] != column[b]) return column[a] < column[b];
                  return a < b;
                });
    }
    node_of_.resize(n_);
    row_value_.resize(n_);
  }

  const std::vector<std::vector<double>>& columns() const { return columns_; }
  std::size_t row_count() const { return n_; }

  // Grows one tree on the Newton targets; row_values() afterwards holds the
  // leaf output for every training row.
  RegressionTree fit(const std::vector<double>& targets, const std::vector<double>& g,
                     const std::vector<double>& h) {
    RegressionTree tree;
    tree.nodes.push_back(TreeNode{});
    std::fill(node_of_.begin(), node_of_.end(), 0);

    // Per active slot at the current level.
    std::vector<int> slot_tree_index{0};
    const std::size_t min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);

    for (int level = 0; !slot_tree_index.empty(); ++level) {
      const std::size_t slots = slot_tree_index.size();
      totals_.assign(slots, SlotTotals{});
      for (std::size_t r = 0; r < n_; ++r) {
        const int slot = node_of_[r];
        if (slot < 0) continue;
        SlotTotals& tot = totals_[static_cast<std::size_t>(slot)];
        ++tot.count;
        tot.sum_target += targets[r];
        tot.sum_g += g[r];
        tot.sum_h += h[r];
      }

      best_.assign(slots, BestSplit{});
      if (level < config_.max_depth) {
        can_split_.assign(slots, 0);
        for (std::size_t s = 0; s < slots; ++s)
          can_split_[s] = totals_[s].count >= 2 * min_leaf;
        search_splits(targets, min_leaf, slots);
      }

      // Materialize decisions: children in BFS order, leaves closed out.
      std::vector<int> next_slot_tree_index;
      std::vector<int> left_slot(slots, -1), right_slot(slots, -1);
      std::vector<double> leaf_value(slots, 0.0);
      for (std::size_t s = 0; s < slots; ++s) {
        TreeNode& node = tree.nodes[static_cast<std::size_t>(slot_tree_index[s])];
        if (best_[s].feature >= 0) {
          node.feature = best_[s].feature;
          node.threshold = best_[s].threshold;
          node.left = static_cast<int>(tree.nodes.size());
          node.right = node.left + 1;
          tree.nodes.push_back(TreeNode{});
          tree.nodes.push_back(TreeNode{});
          left_slot[s] = static_cast<int>(next_slot_tree_index.size());
          next_slot_tree_index.push_back(node.left);
          right_slot[s] = left_slot[s] + 1;
          next_slot_tree_index.push_back(node.right);
        } else {
          node.feature = -1;
          node.value = leaf_value[s] =
              -totals_[s].sum_g / (totals_[s].sum_h + kLeafRegularizer);
        }
      }

      for (std::size_t r = 0; r < n_; ++r) {
        const int slot = node_of_[r];
        if (slot < 0) continue;
        const std::size_t s = static_cast<std::size_t>(slot);
        if (best_[s].feature < 0) {
          row_value_[r] = leaf_value[s];
          node_of_[r] = -1;
        } else {
          const double v = columns_[static_cast<std::size_t>(best_[s].feature)][r];
          node_of_[r] = v <= best_[s].threshold ? left_slot[s] : right_slot[s];
        }
      }
      slot_tree_index = std::move(next_slot_tree_index);
    }
    return tree;
  }

  const std::vector<double>& row_values() const { return row_value_; }

 private:
  struct SlotTotals {
    std::size_t count = 0;
    double sum_target = 0.0;
    double sum_g = 0.0;
    double sum_h = 0.0;
  };
  struct BestSplit {
    double gain = kMinSplitGain;
    int feature = -1;
    double threshold = 0.0;
  };
  struct ScanState {
    std::size_t count_left = 0;
    double sum_left = 0.0;
    double last_value = 0.0;
  };

  void search_splits(const std::vector<double>& targets, std::size_t min_leaf,
                     std::size_t slots) {
    for (std::size_t f = 0; f < columns_.size(); ++f) {
      scan_.assign(slots, ScanState{});
      const std::vector<double>& column = columns_[f];
      for (const std::uint32_t r : sorted_[f]) {
        const int slot = node_of_[r];
        if (slot < 0) continue;
        const std::size_t s = static_cast<std::size_t>(slot);
        if (!can_split_[s]) continue;
        ScanState& scan = scan_[s];
        const double v = column[r];
        if (scan.count_left > 0 && v > scan.last_value) {
          const SlotTotals& tot = totals_[s];
          const std::size_t right = tot.count - scan.count_left;
          if (scan.count_left >= min_leaf && right >= min_leaf) {
            const double sum_right = tot.sum_target - scan.sum_left;
            const double gain =
                scan.sum_left * scan.sum_left / static_cast<double>(scan.count_left) +
                sum_right * sum_right / static_cast<double>(right) -
                tot.sum_target * tot.sum_target / static_cast<double>(tot.count);
            if (gain > best_[s].gain) {
              best_[s].gain = gain;
              best_[s].feature = static_cast<int>(f);
              best_[s].threshold = scan.last_value;
            }
          }
        }
        ++scan.count_left;
        scan.sum_left += targets[r];
        scan.last_value = v;
      }
    }
  }

  std::vector<std::vector<double>> columns_;        // [width][n]
  std::vector<std::vector<std::uint32_t>> sorted_;  // [width][n], value-ascending
  RankConfig config_;
  std::size_t n_ = 0;

  // Scratch reused across rounds and levels.
  std::vector<int> node_of_;
  std::vector<double> row_value_;
  std::vector<SlotTotals> totals_;
  std::vector<BestSplit> best_;
  std::vector<ScanState> scan_;
  std::vector<char> can_split_;
};

struct GroupSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::uint64_t id_hash = 0;
};

}  // namespace

RankModel train(const TrainingBundle& bundle, const RankConfig& config) {
  check_config(config);
  if (bundle.groups.empty()) throw Error("training requires at least one group");
  const std::size_t width = bundle.feature_width();

  std::size_t n = 0;
  bool any_pairs = false;
  for (const TrainingGroup& group : bundle.groups) {
    if (group.feature_rows.size() != group.labels.size())
      throw Error("group '" + group.dataset_id + "' has " +
                  std::to_string(group.feature_rows.size()) + " rows but " +
                  std::to_string(group.labels.size()) + " labels");
    for (const std::vector<double>& row : group.feature_rows)
      if (row.size() != width)
        throw Error("group '" + group.dataset_id + "' has a row of width " +
                    std::to_string(row.size()) + "; the bundle encoding implies " +
                    std::to_string(width));
    for (std::size_t i = 1; i < group.labels.size(); ++i)
      if (group.labels[i] != group.labels[0]) any_pairs = true;
    n += group.labels.size();
  }
  if (!any_pairs)
    throw Error("no trainable pairs: every group has a single distinct label");

  std::vector<std::vector<double>> columns(width, std::vector<double>(n));
  std::vector<double> labels(n);
  std::vector<GroupSpan> spans;
  spans.reserve(bundle.groups.size());
  std::size_t at = 0;
  for (const TrainingGroup& group : bundle.groups) {
    GroupSpan span;
    span.begin = at;
    span.id_hash = xxh64(group.dataset_id);
    for (std::size_t i = 0; i < group.feature_rows.size(); ++i, ++at) {
      for (std::size_t f = 0; f < width; ++f) columns[f][at] = group.feature_rows[i][f];
      labels[at] = group.labels[i];
    }
    span.end = at;
    spans.push_back(span);
  }

  TreeBuilder builder(std::move(columns), config);

  std::vector<double> scores(n, 0.0);
  std::vector<double> g(n), h(n), targets(n), group_labels;
  RankModel model;
  model.base_score = 0.0;
  model.vocabulary = bundle.vocabulary;
  model.slot_count = bundle.slot_count;
  model.mf_version = bundle.mf_version;
  model.task = bundle.task;
  model.metric = bundle.metric;
  model.config = config;
  model.trees.reserve(static_cast<std::size_t>(config.n_trees));

  const std::size_t max_pairs = static_cast<std::size_t>(config.max_pairs_per_group);
  for (int round = 0; round < config.n_trees; ++round) {
    std::fill(g.begin(), g.end(), 0.0);
    std::fill(h.begin(), h.end(), 0.0);
    for (const GroupSpan& span : spans) {
      group_labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(span.begin),
                          labels.begin() + static_cast<std::ptrdiff_t>(span.end));
      SplitMix64 rng(mix_seed(config.seed, span.id_hash,
                              static_cast<std::uint64_t>(round)));
      const std::vector<IndexPair> pairs = sample_pairs(group_labels, max_pairs, rng);
      for (const auto& [i, j] : pairs) {
        const std::size_t gi = span.begin + i;
        const std::size_t gj = span.begin + j;
        const double sig = pair_sigma(scores[gi] - scores[gj]);
        g[gi] -= sig;
        g[gj] += sig;
        const double curv = sig * (1.0 - sig);
        h[gi] += curv;
        h[gj] += curv;
      }
    }
    for (std::size_t r = 0; r < n; ++r)
      targets[r] = -g[r] / std::max(h[r], kHessianFloor);
    model.trees.push_back(builder.fit(targets, g, h));
    const std::vector<double>& leaf = builder.row_values();
    for (std::size_t r = 0; r < n; ++r) scores[r] += config.learning_rate * leaf[r];
  }
  return model;
}

double predict(const RankModel& model, std::span<const double> row) {
  if (row.size() != model.feature_width())
    throw Error("row width " + std::to_string(row.size()) +
                " does not match the model's feature width " +
                std::to_string(model.feature_width()));
  double score = model.base_score;
  for (const RegressionTree& tree : model.trees)
    score += model.config.learning_rate * tree.evaluate(row);
  return score;
}

std::vector<double> candidate_row(const RankModel& model, const MetaFeatureVector& mf,
                                  const PipelineGraph& candidate,
                                  std::size_t* unknown_tokens) {
  if (mf.schema_version != model.mf_version)
    throw Error("meta-feature schema version " + std::to_string(mf.schema_version) +
                " does not match the model's version " + std::to_string(model.mf_version));
  const PipelineSequence seq = encode_pipeline(candidate, model.slot_count);
  std::vector<double> row(mf.values.begin(), mf.values.end());
  const std::vector<double> encoded = featurize_sequence(seq, model.vocabulary, unknown_tokens);
  row.insert(row.end(), encoded.begin(), encoded.end());
  return row;
}

RankingResult rank_candidates(const RankModel& model, const MetaFeatureVector& mf,
                              const std::vector<PipelineGraph>& candidates) {
  RankingResult result;
  struct Entry {
    std::size_t index;
    double score;
    std::vector<std::uint64_t> canonical;
  };
  std::vector<Entry> entries;
  entries.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::vector<std::uint64_t> canonical = canonical_tokens(candidates[i]);
    if (canonical.size() > model.slot_count) {
      result.skipped.push_back(i);
      continue;
    }
    const std::vector<double> row =
        candidate_row(model, mf, candidates[i], &result.unknown_tokens);
    entries.push_back(Entry{i, predict(model, row), std::move(canonical)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.canonical != b.canonical) return a.canonical < b.canonical;
    return a.index < b.index;
  });
  result.ranked.reserve(entries.size());
  for (const Entry& e : entries) result.ranked.push_back(RankedCandidate{e.index, e.score});
  return result;
}

namespace {

nlohmann::json tree_to_json(const RegressionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : tree.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return nodes;
}

RegressionTree tree_from_json(const nlohmann::json& j, std::size_t width,
                              const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(where + ": tree must be a non-empty array");
  RegressionTree tree;
  tree.nodes.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const nlohmann::json& node = j[i];
    if (!node.is_array() || node.size() != 5 || !node[0].is_number_integer() ||
        !node[1].is_number() || !node[2].is_number_integer() ||
        !node[3].is_number_integer() || !node[4].is_number())
      throw Error(where + ": tree node " + std::to_string(i) +
                  " must be [feature, threshold, left, right, value]");
    TreeNode t;
    t.feature = node[0].get<int>();
    t.threshold = node[1].get<double>();
    t.left = node[2].get<int>();
    t.right = node[3].get<int>();
    t.value = node[4].get<double>();
    if (t.feature >= 0) {
      if (static_cast<std::size_t>(t.feature) >= width)
        throw Error(where + ": tree node " + std::to_string(i) +
                    " splits on a feature outside the model width");
      const bool children_ok = t.left > static_cast<int>(i) &&
                               t.right > static_cast<int>(i) &&
                               static_cast<std::size_t>(t.left) < j.size() &&
                               static_cast<std::size_t>(t.right) < j.size();
      if (!children_ok)
        throw Error(where + ": tree node " + std::to_string(i) +
                    " has malformed child links");
    }
    tree.nodes.push_back(t);
  }
  return tree;
}

}  // namespace

void model_save(const RankModel& model, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["base_score"] = model.base_score;
  j["slot_count"] = model.slot_count;
  j["mf_version"] = model.mf_version;
  j["task"] = std::string(task_name(model.task));
  j["metric"] = std::string(metric_name(model.metric));
  j["config"] = {{"learning_rate", model.config.learning_rate},
                 {"max_depth", model.config.max_depth},
                 {"n_trees", model.config.n_trees},
                 {"max_pairs_per_group", model.config.max_pairs_per_group},
                 {"min_samples_leaf", model.config.min_samples_leaf},
                 {"seed", model.config.seed}};
  nlohmann::json vocabulary = nlohmann::json::array();
  for (const VocabularyEntry& e : model.vocabulary.entries())
    vocabulary.push_back({{"name", e.name},
                          {"family", std::string(family_name(e.family))},
                          {"token", e.token}});
  j["vocabulary"] = std::move(vocabulary);
  nlohmann::json trees = nlohmann::json::array();
  for (const RegressionTree& tree : model.trees) trees.push_back(tree_to_json(tree));
  j["trees"] = std::move(trees);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file '" + path + "'");
  out << j.dump() << '\n';
  if (!out.flush()) throw Error("failed writing model file '" + path + "'");
}

RankModel model_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const std::exception& e) {
    throw Error("model file '" + path + "': " + e.what());
  }
  const std::string where = "model file '" + path + "'";
  if (!j.is_object()) throw Error(where + ": expected a JSON object");
  for (const char* field : {"format_version", "base_score", "slot_count", "mf_version",
                            "task", "metric", "config", "vocabulary", "trees"})
    if (!j.contains(field)) throw Error(where + ": missing field '" + std::string(field) + "'");
  if (!j["format_version"].is_number_integer() ||
      j["format_version"].get<int>() != kModelFormatVersion)
    throw Error(where + ": unsupported format version");
  if (j["mf_version"].get<int>() != kMetaFeatureSchemaVersion)
    throw Error(where + ": meta-feature schema version " +
                std::to_string(j["mf_version"].get<int>()) + " does not match " +
                std::to_string(kMetaFeatureSchemaVersion));

  RankModel model;
  model.base_score = j["base_score"].get<double>();
  model.slot_count = j["slot_count"].get<std::size_t>();
  model.mf_version = j["mf_version"].get<int>();
  model.task = task_from_name(j["task"].get<std::string>());
  model.metric = metric_from_name(j["metric"].get<std::string>());

  const nlohmann::json& config = j["config"];
  for (const char* field : {"learning_rate", "max_depth", "n_trees",
                            "max_pairs_per_group", "min_samples_leaf", "seed"})
    if (!config.contains(field))
      throw Error(where + ": config is missing '" + std::string(field) + "'");
  model.config.learning_rate = config["learning_rate"].get<double>();
  model.config.max_depth = config["max_depth"].get<int>();
  model.config.n_trees = config["n_trees"].get<int>();
  model.config.max_pairs_per_group = config["max_pairs_per_group"].get<int>();
  model.config.min_samples_leaf = config["min_samples_leaf"].get<int>();
  model.config.seed = config["seed"].get<std::uint64_t>();

  std::vector<VocabularyEntry> entries;
  for (const nlohmann::json& e : j["vocabulary"]) {
    if (!e.is_object() || !e.contains("name") || !e.contains("family") ||
        !e.contains("token"))
      throw Error(where + ": vocabulary entries need name, family, token");
    entries.push_back(VocabularyEntry{e["name"].get<std::string>(),
                                      family_from_name(e["family"].get<std::string>()),
                                      e["token"].get<std::uint64_t>()});
  }
  try {
    model.vocabulary = PrimitiveVocabulary::from_entries(std::move(entries));
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }

  const std::size_t width = model.feature_width();
  for (const nlohmann::json& tree : j["trees"])
    model.trees.push_back(tree_from_json(tree, width, where));
  return model;
}

}  // namespace rankml
