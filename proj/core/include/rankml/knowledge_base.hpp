#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "rankml/meta_features.hpp"
#include "rankml/pipeline.hpp"
#include "rankml/tabular.hpp"

namespace rankml {

enum class Metric { accuracy, mse };

std::string_view metric_name(Metric m);
Metric metric_from_name(std::string_view name);  // throws Error
bool higher_is_better(Metric m);

// One offline measurement: how a pipeline topology scored on a dataset. The
// dataset itself is not stored; its meta-features are cached so evaluation
// never re-extracts them.
struct PerformanceRecord {
  std::string dataset_id;
  Task task = Task::classification;
  Metric metric = Metric::accuracy;
  PipelineGraph pipeline;
  double score = 0.0;
  MetaFeatureVector meta_features;

  bool operator==(const PerformanceRecord&) const = default;
};

// Deduplicated store of performance records, at most one per
// (dataset_id, task, metric, canonical pipeline sequence); collisions keep
// the better score (higher accuracy, lower mse) and ties keep the incumbent.
class KnowledgeBase {
 public:
  using Key = std::tuple<std::string, Task, Metric, std::vector<std::uint64_t>>;

  // Returns true when the record was stored (new key or improved score).
  // Throws Error when the record violates its invariants.
  bool insert(PerformanceRecord r);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  int version() const { return kMetaFeatureSchemaVersion; }

  // Deterministic iteration in key order.
  const std::map<Key, PerformanceRecord>& records() const { return records_; }

  // Distinct topologies observed for (task, metric), ordered by canonical
  // sequence; deduplicated across datasets.
  std::vector<PipelineGraph> candidates(Task task, Metric metric) const;

  // Dataset ids holding at least one (task, metric) record, sorted.
  std::vector<std::string> dataset_ids(Task task, Metric metric) const;

  bool operator==(const KnowledgeBase&) const = default;

 private:
  std::map<Key, PerformanceRecord> records_;
};

struct KbStats {
  std::size_t record_count = 0;
  std::size_t dataset_count = 0;
  std::size_t topology_count = 0;   // distinct canonical sequences
  std::size_t max_length = 0;       // L: longest pipeline, in nodes
};

KbStats kb_stats(const KnowledgeBase& kb);

// JSON Lines persistence, one record per line, written in key order so that
// save is deterministic; save then load reproduces the record set exactly.
KnowledgeBase kb_load(const std::string& path);
void kb_save(const KnowledgeBase& kb, const std::string& path);

// Parse / serialize a single record line (exposed for streaming importers).
PerformanceRecord record_from_json_text(std::string_view text, const std::string& where);
std::string record_to_json_text(const PerformanceRecord& r);

}  // namespace rankml
