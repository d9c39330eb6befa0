#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rankml {

enum class PrimitiveFamily {
  data_preprocessing,
  feature_preprocessing,
  feature_engineering,
  predictive_model,
  special,  // reserved for the DATA input marker and the BLANK padding token
};

std::string_view family_name(PrimitiveFamily f);
PrimitiveFamily family_from_name(std::string_view name);  // throws Error

// Names reserved for the special family.
inline constexpr std::string_view kBlankName = "blank";
inline constexpr std::string_view kDataName = "data";

struct Primitive {
  std::string name;
  PrimitiveFamily family = PrimitiveFamily::special;
  std::uint64_t token = 0;  // xxh64(name, 0); stable across runs and machines

  bool operator==(const Primitive&) const = default;
};

Primitive make_primitive(std::string name, PrimitiveFamily family);
const Primitive& blank_primitive();
const Primitive& data_primitive();

// A pipeline as a primitive in-tree: edge (from, to) feeds `from`'s output
// into `to`. Construction does not enforce the invariants; validate_pipeline
// reports violations as values.
struct PipelineGraph {
  std::vector<Primitive> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  bool operator==(const PipelineGraph&) const = default;
};

enum class PipelineViolation {
  none,
  malformed_edge,      // edge endpoint out of range
  reserved_name,       // blank/data used outside the special family (or vice versa)
  cyclic,
  sink_count,          // not exactly one node with out-degree 0
  sink_not_model,
  source_not_data,     // a node with in-degree 0 that is not the data marker
  data_has_inputs,
  unreachable_node,    // node with no path to the sink
  branching_output,    // non-sink node with out-degree != 1
};

std::string_view violation_name(PipelineViolation v);

struct ValidationResult {
  PipelineViolation violation = PipelineViolation::none;
  std::string detail;

  bool ok() const { return violation == PipelineViolation::none; }
};

// Checks the invariants in declaration order and reports the first violation.
ValidationResult validate_pipeline(const PipelineGraph& g);

// Node ids in emission order: the sink first, every node before the nodes of
// its input subtrees; parallel inputs ordered by longest-path depth
// (descending), ties by the subtrees' own emitted token sequences (ascending).
// Requires a valid pipeline (throws Error otherwise).
std::vector<std::size_t> emission_order(const PipelineGraph& g);

struct PipelineSequence {
  std::vector<std::uint64_t> tokens;  // length == slot_count, blank-padded
  std::size_t slot_count = 0;
};

// Fixed-length token serialization; pads with the blank token. Requires a
// valid pipeline with at most slot_count nodes.
PipelineSequence encode_pipeline(const PipelineGraph& g, std::size_t slot_count);

// Unpadded token emission; used as the canonical identity of a topology.
std::vector<std::uint64_t> canonical_tokens(const PipelineGraph& g);

// Primitive names in emission order, blank-padded to slot_count when given.
std::vector<std::string> emitted_names(const PipelineGraph& g,
                                       std::size_t slot_count = 0);

// Max node count over a non-empty list of pipelines; fixes the slot count for
// a knowledge base.
std::size_t max_pipeline_length(const std::vector<PipelineGraph>& pipelines);

struct VocabularyEntry {
  std::string name;
  PrimitiveFamily family;
  std::uint64_t token;
};

// Token -> (index, family) mapping frozen into a trained model. Index 0 is
// blank, index 1 is data; the remaining primitives are indexed in sorted name
// order.
class PrimitiveVocabulary {
 public:
  PrimitiveVocabulary();

  static PrimitiveVocabulary from_pipelines(const std::vector<PipelineGraph>& pipelines);
  static PrimitiveVocabulary from_entries(std::vector<VocabularyEntry> entries);

  std::size_t size() const { return entries_.size(); }
  const VocabularyEntry& entry(std::size_t index) const { return entries_[index]; }
  const std::vector<VocabularyEntry>& entries() const { return entries_; }
  std::optional<std::size_t> index_of(std::uint64_t token) const;

  bool operator==(const PrimitiveVocabulary& o) const;

 private:
  void add(std::string name, PrimitiveFamily family);

  std::vector<VocabularyEntry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> by_token_;
};

// Numeric encoding consumed by the tree model: per slot the pair
// (vocabulary index, family ordinal), then one bag-of-primitives count per
// vocabulary entry; total width 2 * slot_count + vocabulary size. Tokens
// absent from the vocabulary map to the blank index; when `unknown_tokens`
// is non-null the number of such slots is added to it.
std::vector<double> featurize_sequence(const PipelineSequence& s,
                                       const PrimitiveVocabulary& vocabulary,
                                       std::size_t* unknown_tokens = nullptr);

// JSON form: {"nodes":[{"id":int,"name":str,"family":str}],"edges":[[from,to],...]}
PipelineGraph pipeline_from_json_text(std::string_view text);
std::string pipeline_to_json_text(const PipelineGraph& g);

}  // namespace rankml
