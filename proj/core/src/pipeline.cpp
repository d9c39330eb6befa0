#include "rankml/pipeline.hpp"

#include <algorithm>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "pipeline_json.hpp"
#include "rankml/error.hpp"
#include "rankml/hash.hpp"

namespace rankml {

std::string_view family_name(PrimitiveFamily f) {
  switch (f) {
    case PrimitiveFamily::data_preprocessing: return "data_preprocessing";
    case PrimitiveFamily::feature_preprocessing: return "feature_preprocessing";
    case PrimitiveFamily::feature_engineering: return "feature_engineering";
    case PrimitiveFamily::predictive_model: return "predictive_model";
    case PrimitiveFamily::special: return "special";
  }
  throw Error("unknown primitive family ordinal");
}

PrimitiveFamily family_from_name(std::string_view name) {
  if (name == "data_preprocessing") return PrimitiveFamily::data_preprocessing;
  if (name == "feature_preprocessing") return PrimitiveFamily::feature_preprocessing;
  if (name == "feature_engineering") return PrimitiveFamily::feature_engineering;
  if (name == "predictive_model") return PrimitiveFamily::predictive_model;
  if (name == "special") return PrimitiveFamily::special;
  throw Error("unknown primitive family '" + std::string(name) + "'");
}

Primitive make_primitive(std::string name, PrimitiveFamily family) {
  if (name.empty()) throw Error("primitive name must be non-empty");
  Primitive p;
  p.token = xxh64(name);
  p.name = std::move(name);
  p.family = family;
  return p;
}

const Primitive& blank_primitive() {
  static const Primitive p = make_primitive(std::string(kBlankName), PrimitiveFamily::special);
  return p;
}

const Primitive& data_primitive() {
  static const Primitive p = make_primitive(std::string(kDataName), PrimitiveFamily::special);
  return p;
}

std::string_view violation_name(PipelineViolation v) {
  switch (v) {
    case PipelineViolation::none: return "none";
    case PipelineViolation::malformed_edge: return "malformed_edge";
    case PipelineViolation::reserved_name: return "reserved_name";
    case PipelineViolation::cyclic: return "cyclic";
    case PipelineViolation::sink_count: return "sink_count";
    case PipelineViolation::sink_not_model: return "sink_not_model";
    case PipelineViolation::source_not_data: return "source_not_data";
    case PipelineViolation::data_has_inputs: return "data_has_inputs";
    case PipelineViolation::unreachable_node: return "unreachable_node";
    case PipelineViolation::branching_output: return "branching_output";
  }
  throw Error("unknown pipeline violation ordinal");
}

namespace {

ValidationResult fail(PipelineViolation v, std::string detail) {
  return ValidationResult{v, std::move(detail)};
}

bool is_data(const Primitive& p) {
  return p.family == PrimitiveFamily::special && p.name == kDataName;
}

}  // namespace

ValidationResult validate_pipeline(const PipelineGraph& g) {
  const std::size_t n = g.nodes.size();
  if (n == 0) return fail(PipelineViolation::sink_count, "pipeline has no nodes");

  for (const auto& [from, to] : g.edges) {
    if (from >= n || to >= n)
      return fail(PipelineViolation::malformed_edge,
                  "edge (" + std::to_string(from) + ", " + std::to_string(to) +
                      ") references a missing node");
    if (from == to)
      return fail(PipelineViolation::malformed_edge,
                  "edge (" + std::to_string(from) + ", " + std::to_string(to) +
                      ") is a self-loop");
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Primitive& p = g.nodes[i];
    const bool reserved = p.name == kBlankName || p.name == kDataName;
    if (reserved != (p.family == PrimitiveFamily::special))
      return fail(PipelineViolation::reserved_name,
                  "node " + std::to_string(i) + " ('" + p.name +
                      "') misuses the reserved special family");
    if (p.name == kBlankName)
      return fail(PipelineViolation::reserved_name,
                  "node " + std::to_string(i) + " uses the padding name '" +
                      std::string(kBlankName) + "'");
    if (p.token != xxh64(p.name))
      return fail(PipelineViolation::reserved_name,
                  "node " + std::to_string(i) + " ('" + p.name +
                      "') carries a token that does not match its name");
  }

  std::vector<std::size_t> out_degree(n, 0), in_degree(n, 0);
  std::vector<std::vector<std::size_t>> out_edges(n);
  for (const auto& [from, to] : g.edges) {
    ++out_degree[from];
    ++in_degree[to];
    out_edges[from].push_back(to);
  }

  // Kahn's algorithm; leftover nodes sit on a cycle.
  {
    std::vector<std::size_t> remaining_in = in_degree;
    std::queue<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
      if (remaining_in[i] == 0) ready.push(i);
    std::size_t seen = 0;
    while (!ready.empty()) {
      const std::size_t node = ready.front();
      ready.pop();
      ++seen;
      for (std::size_t next : out_edges[node])
        if (--remaining_in[next] == 0) ready.push(next);
    }
    if (seen != n)
      return fail(PipelineViolation::cyclic, "pipeline contains a cycle");
  }

  std::vector<std::size_t> sinks;
  for (std::size_t i = 0; i < n; ++i)
    if (out_degree[i] == 0) sinks.push_back(i);
  if (sinks.size() != 1)
    return fail(PipelineViolation::sink_count,
                "expected exactly one sink, found " + std::to_string(sinks.size()));
  const std::size_t sink = sinks.front();
  if (g.nodes[sink].family != PrimitiveFamily::predictive_model)
    return fail(PipelineViolation::sink_not_model,
                "sink '" + g.nodes[sink].name + "' is not a predictive model");

  for (std::size_t i = 0; i < n; ++i) {
    if (in_degree[i] == 0 && !is_data(g.nodes[i]))
      return fail(PipelineViolation::source_not_data,
                  "source node " + std::to_string(i) + " ('" + g.nodes[i].name +
                      "') is not the data marker");
    if (is_data(g.nodes[i]) && in_degree[i] != 0)
      return fail(PipelineViolation::data_has_inputs,
                  "data marker " + std::to_string(i) + " has incoming edges");
  }

  // With one sink, acyclicity, and out-degrees checked below, every node can
  // reach the sink; this check guards graphs that slip past future edits.
  {
    std::vector<char> reaches(n, 0);
    reaches[sink] = 1;
    std::vector<std::vector<std::size_t>> in_edges(n);
    for (const auto& [from, to] : g.edges) in_edges[to].push_back(from);
    std::queue<std::size_t> frontier;
    frontier.push(sink);
    while (!frontier.empty()) {
      const std::size_t node = frontier.front();
      frontier.pop();
      for (std::size_t prev : in_edges[node])
        if (!reaches[prev]) {
          reaches[prev] = 1;
          frontier.push(prev);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!reaches[i])
        return fail(PipelineViolation::unreachable_node,
                    "node " + std::to_string(i) + " ('" + g.nodes[i].name +
                        "') has no path to the sink");
  }

  for (std::size_t i = 0; i < n; ++i)
    if (i != sink && out_degree[i] != 1)
      return fail(PipelineViolation::branching_output,
                  "node " + std::to_string(i) + " ('" + g.nodes[i].name +
                      "') feeds " + std::to_string(out_degree[i]) +
                      " consumers; every non-sink node must feed exactly one");

  return ValidationResult{};
}

namespace {

// Emission walker over a validated in-tree. Children are visited deepest
// subtree first; equally deep subtrees are ordered by their own emitted token
// sequences so that the serialization is independent of node and edge order.
class Emitter {
 public:
  explicit Emitter(const PipelineGraph& g) : g_(g) {
    children_.resize(g.nodes.size());
    for (const auto& [from, to] : g.edges) children_[to].push_back(from);
    height_.assign(g.nodes.size(), -1);
    sequence_.resize(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (!has_consumer(i)) sink_ = i;
  }

  std::vector<std::size_t> order() {
    std::vector<std::size_t> out;
    out.reserve(g_.nodes.size());
    emit(sink_, out);
    return out;
  }

 private:
  bool has_consumer(std::size_t node) const {
    for (const auto& [from, to] : g_.edges)
      if (from == node) return true;
    return false;
  }

  int height(std::size_t node) {
    int& memo = height_[node];
    if (memo >= 0) return memo;
    int best = 0;
    for (std::size_t child : children_[node])
      best = std::max(best, 1 + height(child));
    return memo = best;
  }

  const std::vector<std::uint64_t>& sequence(std::size_t node) {
    std::vector<std::uint64_t>& memo = sequence_[node];
    if (!memo.empty()) return memo;
    memo.push_back(g_.nodes[node].token);
    for (std::size_t child : ordered_children(node)) {
      const auto& sub = sequence(child);
      memo.insert(memo.end(), sub.begin(), sub.end());
    }
    return memo;
  }

  std::vector<std::size_t> ordered_children(std::size_t node) {
    std::vector<std::size_t> kids = children_[node];
    // Materialize child sequences before sorting on them.
    for (std::size_t child : kids) sequence(child);
    std::sort(kids.begin(), kids.end(), [this](std::size_t a, std::size_t b) {
      const int ha = height(a), hb = height(b);
      if (ha != hb) return ha > hb;
      if (sequence_[a] != sequence_[b]) return sequence_[a] < sequence_[b];
      return a < b;
    });
    return kids;
  }

  void emit(std::size_t node, std::vector<std::size_t>& out) {
    out.push_back(node);
    for (std::size_t child : ordered_children(node)) emit(child, out);
  }

  const PipelineGraph& g_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<int> height_;
  std::vector<std::vector<std::uint64_t>> sequence_;
  std::size_t sink_ = 0;
};

void require_valid(const PipelineGraph& g) {
  const ValidationResult r = validate_pipeline(g);
  if (!r.ok())
    throw Error("invalid pipeline (" + std::string(violation_name(r.violation)) +
                "): " + r.detail);
}

}  // namespace

std::vector<std::size_t> emission_order(const PipelineGraph& g) {
  require_valid(g);
  return Emitter(g).order();
}

PipelineSequence encode_pipeline(const PipelineGraph& g, std::size_t slot_count) {
  const std::vector<std::size_t> order = emission_order(g);
  if (order.size() > slot_count)
    throw Error("pipeline has " + std::to_string(order.size()) +
                " nodes but the encoding provides " + std::to_string(slot_count) +
                " slots");
  PipelineSequence s;
  s.slot_count = slot_count;
  s.tokens.reserve(slot_count);
  for (std::size_t node : order) s.tokens.push_back(g.nodes[node].token);
  s.tokens.resize(slot_count, blank_primitive().token);
  return s;
}

std::vector<std::uint64_t> canonical_tokens(const PipelineGraph& g) {
  const std::vector<std::size_t> order = emission_order(g);
  std::vector<std::uint64_t> tokens;
  tokens.reserve(order.size());
  for (std::size_t node : order) tokens.push_back(g.nodes[node].token);
  return tokens;
}

std::vector<std::string> emitted_names(const PipelineGraph& g, std::size_t slot_count) {
  const std::vector<std::size_t> order = emission_order(g);
  if (slot_count != 0 && order.size() > slot_count)
    throw Error("pipeline has " + std::to_string(order.size()) +
                " nodes but the encoding provides " + std::to_string(slot_count) +
                " slots");
  std::vector<std::string> names;
  names.reserve(std::max(order.size(), slot_count));
  for (std::size_t node : order) names.push_back(g.nodes[node].name);
  while (names.size() < slot_count) names.emplace_back(kBlankName);
  return names;
}

std::size_t max_pipeline_length(const std::vector<PipelineGraph>& pipelines) {
  if (pipelines.empty()) throw Error("cannot size an encoding from zero pipelines");
  std::size_t best = 0;
  for (const PipelineGraph& g : pipelines) best = std::max(best, g.nodes.size());
  return best;
}

PrimitiveVocabulary::PrimitiveVocabulary() {
  add(std::string(kBlankName), PrimitiveFamily::special);
  add(std::string(kDataName), PrimitiveFamily::special);
}

void PrimitiveVocabulary::add(std::string name, PrimitiveFamily family) {
  Primitive p = make_primitive(std::move(name), family);
  const auto [it, inserted] = by_token_.emplace(p.token, entries_.size());
  if (!inserted) {
    const VocabularyEntry& existing = entries_[it->second];
    if (existing.name != p.name || existing.family != p.family)
      throw Error("vocabulary conflict for '" + p.name + "'");
    return;
  }
  entries_.push_back(VocabularyEntry{std::move(p.name), p.family, p.token});
}

PrimitiveVocabulary PrimitiveVocabulary::from_pipelines(
    const std::vector<PipelineGraph>& pipelines) {
  std::unordered_map<std::uint64_t, std::pair<std::string, PrimitiveFamily>> seen;
  for (const PipelineGraph& g : pipelines) {
    for (const Primitive& p : g.nodes) {
      if (p.family == PrimitiveFamily::special) continue;  // data marker is built in
      const auto [it, inserted] = seen.emplace(p.token, std::make_pair(p.name, p.family));
      if (!inserted && (it->second.first != p.name || it->second.second != p.family))
        throw Error("primitive '" + p.name + "' appears with conflicting definitions");
    }
  }
  std::vector<std::pair<std::string, PrimitiveFamily>> sorted;
  sorted.reserve(seen.size());
  for (auto& [token, def] : seen) sorted.push_back(def);
  std::sort(sorted.begin(), sorted.end());
  PrimitiveVocabulary v;
  for (auto& [name, family] : sorted) v.add(name, family);
  return v;
}

PrimitiveVocabulary PrimitiveVocabulary::from_entries(std::vector<VocabularyEntry> entries) {
  if (entries.size() < 2 || entries[0].name != kBlankName || entries[1].name != kDataName)
    throw Error("vocabulary must start with the blank and data entries");
  PrimitiveVocabulary v;
  for (std::size_t i = 2; i < entries.size(); ++i) {
    const VocabularyEntry& e = entries[i];
    if (e.family == PrimitiveFamily::special)
      throw Error("vocabulary entry '" + e.name + "' misuses the special family");
    if (i > 2 && !(entries[i - 1].name < e.name))
      throw Error("vocabulary entries must be sorted by name");
    v.add(e.name, e.family);
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].token != v.entries_[i].token)
      throw Error("vocabulary entry '" + entries[i].name + "' carries a stale token");
  return v;
}

std::optional<std::size_t> PrimitiveVocabulary::index_of(std::uint64_t token) const {
  const auto it = by_token_.find(token);
  if (it == by_token_.end()) return std::nullopt;
  return it->second;
}

bool PrimitiveVocabulary::operator==(const PrimitiveVocabulary& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const VocabularyEntry& a = entries_[i];
    const VocabularyEntry& b = o.entries_[i];
    if (a.name != b.name || a.family != b.family || a.token != b.token) return false;
  }
  return true;
}

std::vector<double> featurize_sequence(const PipelineSequence& s,
                                       const PrimitiveVocabulary& vocabulary,
                                       std::size_t* unknown_tokens) {
  if (s.tokens.size() != s.slot_count)
    throw Error("sequence token count does not match its slot count");
  std::vector<double> out;
  out.reserve(2 * s.slot_count + vocabulary.size());
  std::vector<double> bag(vocabulary.size(), 0.0);
  for (std::uint64_t token : s.tokens) {
    std::size_t index = 0;
    if (const auto found = vocabulary.index_of(token); found.has_value()) {
      index = *found;
    } else if (unknown_tokens != nullptr) {
      ++*unknown_tokens;
    }
    out.push_back(static_cast<double>(index));
    out.push_back(static_cast<double>(static_cast<int>(vocabulary.entry(index).family)));
    bag[index] += 1.0;
  }
  out.insert(out.end(), bag.begin(), bag.end());
  return out;
}

namespace detail {

nlohmann::json pipeline_to_json(const PipelineGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    nodes.push_back({{"id", i},
                     {"name", g.nodes[i].name},
                     {"family", std::string(family_name(g.nodes[i].family))}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [from, to] : g.edges) edges.push_back({from, to});
  return nlohmann::json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

PipelineGraph pipeline_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges") ||
      !j["nodes"].is_array() || !j["edges"].is_array())
    throw Error(where + ": expected an object with 'nodes' and 'edges' arrays");

  PipelineGraph g;
  std::unordered_map<std::int64_t, std::size_t> position_of;
  for (const nlohmann::json& node : j["nodes"]) {
    if (!node.is_object() || !node.contains("id") || !node.contains("name") ||
        !node.contains("family") || !node["id"].is_number_integer() ||
        !node["name"].is_string() || !node["family"].is_string())
      throw Error(where + ": node entries need integer 'id', string 'name', string 'family'");
    const std::int64_t id = node["id"].get<std::int64_t>();
    if (!position_of.emplace(id, g.nodes.size()).second)
      throw Error(where + ": duplicate node id " + std::to_string(id));
    g.nodes.push_back(make_primitive(node["name"].get<std::string>(),
                                     family_from_name(node["family"].get<std::string>())));
  }
  for (const nlohmann::json& edge : j["edges"]) {
    if (!edge.is_array() || edge.size() != 2 || !edge[0].is_number_integer() ||
        !edge[1].is_number_integer())
      throw Error(where + ": edge entries must be [from_id, to_id] integer pairs");
    const auto from = position_of.find(edge[0].get<std::int64_t>());
    const auto to = position_of.find(edge[1].get<std::int64_t>());
    if (from == position_of.end() || to == position_of.end())
      throw Error(where + ": edge references a node id that does not exist");
    g.edges.emplace_back(from->second, to->second);
  }
  return g;
}

}  // namespace detail

PipelineGraph pipeline_from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(std::string("pipeline json: ") + e.what());
  }
  return detail::pipeline_from_json(j, "pipeline");
}

std::string pipeline_to_json_text(const PipelineGraph& g) {
  return detail::pipeline_to_json(g).dump();
}

}  // namespace rankml
