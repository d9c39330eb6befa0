#include "rankml/knowledge_base.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pipeline_json.hpp"
#include "rankml/error.hpp"

namespace rankml {

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::accuracy: return "accuracy";
    case Metric::mse: return "mse";
  }
  throw Error("unknown metric ordinal");
}

Metric metric_from_name(std::string_view name) {
  if (name == "accuracy") return Metric::accuracy;
  if (name == "mse") return Metric::mse;
  throw Error("unknown metric '" + std::string(name) + "'");
}

bool higher_is_better(Metric m) { return m == Metric::accuracy; }

namespace {

void check_record(const PerformanceRecord& r) {
  if (r.dataset_id.empty()) throw Error("record has an empty dataset_id");
  const bool consistent =
      (r.metric == Metric::accuracy && r.task == Task::classification) ||
      (r.metric == Metric::mse && r.task == Task::regression);
  if (!consistent)
    throw Error("metric '" + std::string(metric_name(r.metric)) +
                "' is inconsistent with task '" + std::string(task_name(r.task)) + "'");
  if (!std::isfinite(r.score)) throw Error("record score must be finite");
  if (r.metric == Metric::accuracy && (r.score < 0.0 || r.score > 1.0))
    throw Error("accuracy must lie in [0, 1]");
  if (r.metric == Metric::mse && r.score < 0.0) throw Error("mse must be non-negative");
  if (r.meta_features.schema_version != kMetaFeatureSchemaVersion)
    throw Error("record carries meta-feature schema version " +
                std::to_string(r.meta_features.schema_version) + "; this build expects " +
                std::to_string(kMetaFeatureSchemaVersion));
}

bool improves(Metric m, double candidate, double incumbent) {
  return higher_is_better(m) ? candidate > incumbent : candidate < incumbent;
}

}  // namespace

bool KnowledgeBase::insert(PerformanceRecord r) {
  check_record(r);
  Key key{r.dataset_id, r.task, r.metric, canonical_tokens(r.pipeline)};
  const auto it = records_.find(key);
  if (it == records_.end()) {
    records_.emplace(std::move(key), std::move(r));
    return true;
  }
  if (improves(r.metric, r.score, it->second.score)) {
    it->second = std::move(r);
    return true;
  }
  return false;
}

std::vector<PipelineGraph> KnowledgeBase::candidates(Task task, Metric metric) const {
  std::map<std::vector<std::uint64_t>, const PipelineGraph*> unique;
  for (const auto& [key, record] : records_) {
    if (std::get<1>(key) != task || std::get<2>(key) != metric) continue;
    unique.emplace(std::get<3>(key), &record.pipeline);
  }
  std::vector<PipelineGraph> out;
  out.reserve(unique.size());
  for (const auto& [tokens, pipeline] : unique) out.push_back(*pipeline);
  return out;
}

std::vector<std::string> KnowledgeBase::dataset_ids(Task task, Metric metric) const {
  std::set<std::string> ids;
  for (const auto& [key, record] : records_)
    if (std::get<1>(key) == task && std::get<2>(key) == metric)
      ids.insert(std::get<0>(key));
  return {ids.begin(), ids.end()};
}

KbStats kb_stats(const KnowledgeBase& kb) {
  KbStats stats;
  stats.record_count = kb.size();
  std::set<std::string> datasets;
  std::set<std::vector<std::uint64_t>> topologies;
  for (const auto& [key, record] : kb.records()) {
    datasets.insert(std::get<0>(key));
    topologies.insert(std::get<3>(key));
    stats.max_length = std::max(stats.max_length, record.pipeline.nodes.size());
  }
  stats.dataset_count = datasets.size();
  stats.topology_count = topologies.size();
  return stats;
}

PerformanceRecord record_from_json_text(std::string_view text, const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(where + ": " + e.what());
  }
  if (!j.is_object()) throw Error(where + ": expected a JSON object");
  for (const char* field :
       {"dataset_id", "task", "metric", "score", "meta_features", "mf_version", "pipeline"})
    if (!j.contains(field))
      throw Error(where + ": missing field '" + std::string(field) + "'");
  if (!j["dataset_id"].is_string() || !j["task"].is_string() || !j["metric"].is_string() ||
      !j["score"].is_number() || !j["meta_features"].is_array() ||
      !j["mf_version"].is_number_integer())
    throw Error(where + ": field has the wrong type");

  PerformanceRecord r;
  r.dataset_id = j["dataset_id"].get<std::string>();
  r.task = task_from_name(j["task"].get<std::string>());
  r.metric = metric_from_name(j["metric"].get<std::string>());
  r.score = j["score"].get<double>();
  const nlohmann::json& mf = j["meta_features"];
  if (mf.size() != kMetaFeatureCount)
    throw Error(where + ": expected " + std::to_string(kMetaFeatureCount) +
                " meta-features, found " + std::to_string(mf.size()));
  for (std::size_t i = 0; i < kMetaFeatureCount; ++i) {
    if (!mf[i].is_number()) throw Error(where + ": meta-features must be numeric");
    r.meta_features.values[i] = mf[i].get<double>();
  }
  r.meta_features.schema_version = j["mf_version"].get<int>();
  if (r.meta_features.schema_version != kMetaFeatureSchemaVersion)
    throw Error(where + ": meta-feature schema version " +
                std::to_string(r.meta_features.schema_version) + " does not match " +
                std::to_string(kMetaFeatureSchemaVersion));
  r.pipeline = detail::pipeline_from_json(j["pipeline"], where);
  return r;
}

std::string record_to_json_text(const PerformanceRecord& r) {
  nlohmann::json j;
  j["dataset_id"] = r.dataset_id;
  j["task"] = std::string(task_name(r.task));
  j["metric"] = std::string(metric_name(r.metric));
  j["score"] = r.score;
  j["meta_features"] = r.meta_features.values;
  j["mf_version"] = r.meta_features.schema_version;
  j["pipeline"] = detail::pipeline_to_json(r.pipeline);
  return j.dump();
}

KnowledgeBase kb_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open knowledge base file '" + path + "'");
  KnowledgeBase kb;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + " line " + std::to_string(line_number);
    PerformanceRecord r = record_from_json_text(line, where);
    try {
      kb.insert(std::move(r));
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }
  return kb;
}

void kb_save(const KnowledgeBase& kb, const std::string& path) {
  std::ostringstream out;
  for (const auto& [key, record] : kb.records()) out << record_to_json_text(record) << '\n';
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write knowledge base file '" + path + "'");
  file << out.str();
  if (!file.flush()) throw Error("failed writing knowledge base file '" + path + "'");
}

}  // namespace rankml
