#include "rankml/pipeline.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include <doctest.h>

#include "rankml/error.hpp"
#include "rankml/hash.hpp"

using namespace rankml;

namespace {

Primitive prim(const std::string& name, PrimitiveFamily family) {
  return make_primitive(name, family);
}

// Combiner joining a three-node branch (data -> Primitive2 -> Primitive3) and
// a two-node branch (data -> Primitive1); six nodes total. The reference
// emission is [Combiner, Primitive3, Primitive2, data, Primitive1, data].
PipelineGraph reference_tree() {
  PipelineGraph g;
  g.nodes = {prim("Combiner", PrimitiveFamily::predictive_model),
             prim("Primitive3", PrimitiveFamily::feature_engineering),
             prim("Primitive2", PrimitiveFamily::feature_preprocessing),
             data_primitive(),
             prim("Primitive1", PrimitiveFamily::data_preprocessing),
             data_primitive()};
  g.edges = {{1, 0}, {2, 1}, {3, 2}, {4, 0}, {5, 4}};
  return g;
}

PipelineGraph chain(const std::vector<Primitive>& source_to_sink) {
  PipelineGraph g;
  g.nodes = source_to_sink;
  for (std::size_t i = 0; i + 1 < g.nodes.size(); ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

PipelineGraph minimal_chain() {
  return chain({data_primitive(),
                prim("StandardScaler", PrimitiveFamily::data_preprocessing),
                prim("LogisticRegression", PrimitiveFamily::predictive_model)});
}

// Relabels node positions by `to_new[i] = new position of node i`.
PipelineGraph permute_nodes(const PipelineGraph& g, const std::vector<std::size_t>& to_new) {
  PipelineGraph out;
  out.nodes.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) out.nodes[to_new[i]] = g.nodes[i];
  for (const auto& [from, to] : g.edges)
    out.edges.emplace_back(to_new[from], to_new[to]);
  return out;
}

}  // namespace

TEST_CASE("make_primitive derives a stable token from the name") {
  const Primitive p = prim("MaxAbsScaler", PrimitiveFamily::data_preprocessing);
  CHECK(p.token == xxh64("MaxAbsScaler"));
  CHECK(p.token == 0xc92425e3e215921fULL);
  CHECK(blank_primitive().token == xxh64("blank"));
  CHECK(data_primitive().token == xxh64("data"));
  CHECK(blank_primitive().family == PrimitiveFamily::special);
  CHECK(data_primitive().family == PrimitiveFamily::special);
  CHECK_THROWS_AS(make_primitive("", PrimitiveFamily::predictive_model), Error);
}

TEST_CASE("family names round trip") {
  for (PrimitiveFamily f :
       {PrimitiveFamily::data_preprocessing, PrimitiveFamily::feature_preprocessing,
        PrimitiveFamily::feature_engineering, PrimitiveFamily::predictive_model,
        PrimitiveFamily::special})
    CHECK(family_from_name(family_name(f)) == f);
  CHECK_THROWS_AS(family_from_name("postprocessing"), Error);
}

TEST_CASE("validate_pipeline accepts well-formed trees") {
  CHECK(validate_pipeline(minimal_chain()).ok());
  CHECK(validate_pipeline(reference_tree()).ok());
  CHECK(violation_name(validate_pipeline(reference_tree()).violation) == "none");
}

TEST_CASE("validate_pipeline reports each violation kind") {
  SUBCASE("empty graph") {
    CHECK(validate_pipeline({}).violation == PipelineViolation::sink_count);
  }
  SUBCASE("edge endpoint out of range") {
    PipelineGraph g = minimal_chain();
    g.edges.emplace_back(0, 9);
    CHECK(validate_pipeline(g).violation == PipelineViolation::malformed_edge);
  }
  SUBCASE("self-loop") {
    PipelineGraph g = minimal_chain();
    g.edges.emplace_back(1, 1);
    CHECK(validate_pipeline(g).violation == PipelineViolation::malformed_edge);
  }
  SUBCASE("padding name used as a node") {
    PipelineGraph g = minimal_chain();
    g.nodes[1] = blank_primitive();
    CHECK(validate_pipeline(g).violation == PipelineViolation::reserved_name);
  }
  SUBCASE("reserved name outside the special family") {
    PipelineGraph g = minimal_chain();
    g.nodes[0] = prim("data", PrimitiveFamily::data_preprocessing);
    CHECK(validate_pipeline(g).violation == PipelineViolation::reserved_name);
  }
  SUBCASE("special family with a working-primitive name") {
    PipelineGraph g = minimal_chain();
    g.nodes[1] = prim("PCA", PrimitiveFamily::feature_preprocessing);
    g.nodes[1].family = PrimitiveFamily::special;
    CHECK(validate_pipeline(g).violation == PipelineViolation::reserved_name);
  }
  SUBCASE("token inconsistent with name") {
    PipelineGraph g = minimal_chain();
    g.nodes[1].token ^= 1;
    const ValidationResult r = validate_pipeline(g);
    CHECK(r.violation == PipelineViolation::reserved_name);
    CHECK(r.detail.find("token") != std::string::npos);
  }
  SUBCASE("two-node cycle") {
    PipelineGraph g;
    g.nodes = {data_primitive(), prim("A", PrimitiveFamily::data_preprocessing),
               prim("B", PrimitiveFamily::feature_engineering),
               prim("M", PrimitiveFamily::predictive_model)};
    g.edges = {{0, 1}, {1, 2}, {2, 1}, {2, 3}};
    CHECK(validate_pipeline(g).violation == PipelineViolation::cyclic);
  }
  SUBCASE("two sinks") {
    PipelineGraph g;
    g.nodes = {data_primitive(), prim("M1", PrimitiveFamily::predictive_model),
               prim("M2", PrimitiveFamily::predictive_model)};
    g.edges = {{0, 1}};
    CHECK(validate_pipeline(g).violation == PipelineViolation::sink_count);
  }
  SUBCASE("sink is not a predictive model") {
    PipelineGraph g = chain({data_primitive(),
                             prim("MinMaxScaler", PrimitiveFamily::data_preprocessing)});
    CHECK(validate_pipeline(g).violation == PipelineViolation::sink_not_model);
  }
  SUBCASE("source that is not the data marker") {
    PipelineGraph g = chain({prim("PCA", PrimitiveFamily::feature_preprocessing),
                             prim("M", PrimitiveFamily::predictive_model)});
    CHECK(validate_pipeline(g).violation == PipelineViolation::source_not_data);
  }
  SUBCASE("lone model node has no data source") {
    PipelineGraph g;
    g.nodes = {prim("M", PrimitiveFamily::predictive_model)};
    CHECK(validate_pipeline(g).violation == PipelineViolation::source_not_data);
  }
  SUBCASE("data marker with an input") {
    PipelineGraph g = chain({data_primitive(), data_primitive(),
                             prim("M", PrimitiveFamily::predictive_model)});
    CHECK(validate_pipeline(g).violation == PipelineViolation::data_has_inputs);
  }
  SUBCASE("node feeding two consumers") {
    PipelineGraph g;
    g.nodes = {data_primitive(), prim("A", PrimitiveFamily::data_preprocessing),
               prim("F", PrimitiveFamily::feature_engineering),
               prim("M", PrimitiveFamily::predictive_model)};
    g.edges = {{0, 1}, {1, 2}, {1, 3}, {2, 3}};
    CHECK(validate_pipeline(g).violation == PipelineViolation::branching_output);
  }
  SUBCASE("checks run in declaration order") {
    // Both a reserved-name misuse and a cycle: the name check fires first.
    PipelineGraph g;
    g.nodes = {blank_primitive(), prim("A", PrimitiveFamily::data_preprocessing),
               prim("B", PrimitiveFamily::feature_engineering)};
    g.edges = {{1, 2}, {2, 1}};
    CHECK(validate_pipeline(g).violation == PipelineViolation::reserved_name);
  }
}

TEST_CASE("two-branch combiner emits the deeper branch first") {
  const PipelineGraph g = reference_tree();
  const std::vector<std::string> expected = {"Combiner", "Primitive3", "Primitive2",
                                             "data",     "Primitive1", "data"};
  CHECK(emitted_names(g) == expected);

  const PipelineSequence seq = encode_pipeline(g, 6);
  REQUIRE(seq.tokens.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(seq.tokens[i] == xxh64(expected[i]));
}

TEST_CASE("encoding pads with blanks to the slot count") {
  const PipelineGraph g = minimal_chain();
  const PipelineSequence seq = encode_pipeline(g, 5);
  CHECK(seq.slot_count == 5);
  REQUIRE(seq.tokens.size() == 5);
  CHECK(seq.tokens[0] == xxh64("LogisticRegression"));
  CHECK(seq.tokens[1] == xxh64("StandardScaler"));
  CHECK(seq.tokens[2] == xxh64("data"));
  CHECK(seq.tokens[3] == blank_primitive().token);
  CHECK(seq.tokens[4] == blank_primitive().token);
  CHECK(emitted_names(g, 5) ==
        std::vector<std::string>{"LogisticRegression", "StandardScaler", "data",
                                 "blank", "blank"});

  SUBCASE("first token is never the padding token") {
    CHECK(seq.tokens[0] != blank_primitive().token);
  }
  SUBCASE("too few slots is an error") {
    CHECK_THROWS_WITH_AS(encode_pipeline(g, 2), doctest::Contains("slots"), Error);
    CHECK_THROWS_AS(emitted_names(g, 2), Error);
  }
  SUBCASE("invalid pipelines cannot be encoded") {
    PipelineGraph bad = minimal_chain();
    bad.edges.emplace_back(2, 0);  // creates a cycle
    CHECK_THROWS_WITH_AS(encode_pipeline(bad, 6), doctest::Contains("cyclic"), Error);
  }
}

TEST_CASE("longer encodings extend shorter ones with blanks") {
  for (const PipelineGraph& g : {reference_tree(), minimal_chain()}) {
    const PipelineSequence small = encode_pipeline(g, g.nodes.size());
    const PipelineSequence big = encode_pipeline(g, g.nodes.size() + 5);
    REQUIRE(big.tokens.size() == small.tokens.size() + 5);
    CHECK(std::equal(small.tokens.begin(), small.tokens.end(), big.tokens.begin()));
    for (std::size_t i = small.tokens.size(); i < big.tokens.size(); ++i)
      CHECK(big.tokens[i] == blank_primitive().token);
  }
}

TEST_CASE("canonical tokens ignore node and edge layout") {
  const PipelineGraph g = reference_tree();
  const std::vector<std::uint64_t> base = canonical_tokens(g);
  CHECK(base.size() == 6);

  const std::vector<std::vector<std::size_t>> relabelings = {
      {5, 4, 3, 2, 1, 0}, {2, 0, 4, 1, 5, 3}, {1, 2, 3, 4, 5, 0}};
  for (const auto& to_new : relabelings) {
    PipelineGraph h = permute_nodes(g, to_new);
    std::reverse(h.edges.begin(), h.edges.end());
    CHECK(canonical_tokens(h) == base);
    CHECK(emitted_names(h) == emitted_names(g));
  }
}

TEST_CASE("every consumer is emitted before its producers") {
  for (const PipelineGraph& g : {reference_tree(), minimal_chain()}) {
    const std::vector<std::size_t> order = emission_order(g);
    std::vector<std::size_t> position(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
    for (const auto& [from, to] : g.edges) {
      CAPTURE(from);
      CAPTURE(to);
      CHECK(position[to] < position[from]);
    }
  }
}

TEST_CASE("equal-depth branches are ordered by their emitted sequences") {
  // Combiner over two single-primitive branches; brute-force both orderings
  // and require the lexicographically smaller emission.
  const auto build = [](const std::string& left, const std::string& right) {
    PipelineGraph g;
    g.nodes = {prim("Combiner", PrimitiveFamily::predictive_model),
               prim(left, PrimitiveFamily::data_preprocessing), data_primitive(),
               prim(right, PrimitiveFamily::data_preprocessing), data_primitive()};
    g.edges = {{1, 0}, {2, 1}, {3, 0}, {4, 3}};
    return g;
  };

  const std::vector<std::pair<std::string, std::string>> names = {
      {"AlphaScaler", "BetaScaler"},
      {"Normalizer", "Binarizer"},
      {"QuantileTransformer", "RobustScaler"},
  };
  for (const auto& [a, b] : names) {
    CAPTURE(a);
    CAPTURE(b);
    const std::vector<std::uint64_t> first = {xxh64("Combiner"), xxh64(a),
                                              xxh64("data"),     xxh64(b),
                                              xxh64("data")};
    const std::vector<std::uint64_t> second = {xxh64("Combiner"), xxh64(b),
                                               xxh64("data"),     xxh64(a),
                                               xxh64("data")};
    const std::vector<std::uint64_t> expected = std::min(first, second);
    // Same topology written down both ways must emit the same winner.
    CHECK(canonical_tokens(build(a, b)) == expected);
    CHECK(canonical_tokens(build(b, a)) == expected);
  }

  SUBCASE("identical equal-depth branches fall back to stable order") {
    const PipelineGraph g = build("Imputer", "Imputer");
    CHECK(emitted_names(g) == std::vector<std::string>{"Combiner", "Imputer", "data",
                                                       "Imputer", "data"});
  }
}

TEST_CASE("max_pipeline_length takes the node-count maximum") {
  CHECK(max_pipeline_length({minimal_chain(), reference_tree()}) == 6);
  CHECK(max_pipeline_length({chain({data_primitive(),
                                    prim("M", PrimitiveFamily::predictive_model)})}) == 2);
  CHECK_THROWS_AS(max_pipeline_length({}), Error);
}

TEST_CASE("vocabulary reserves blank and data, then sorts by name") {
  const PrimitiveVocabulary empty;
  REQUIRE(empty.size() == 2);
  CHECK(empty.entry(0).name == "blank");
  CHECK(empty.entry(1).name == "data");

  const PrimitiveVocabulary v =
      PrimitiveVocabulary::from_pipelines({reference_tree(), minimal_chain()});
  REQUIRE(v.size() == 2 + 6);
  CHECK(v.entry(0).name == "blank");
  CHECK(v.entry(1).name == "data");
  const std::vector<std::string> tail = {"Combiner",   "LogisticRegression",
                                         "Primitive1", "Primitive2",
                                         "Primitive3", "StandardScaler"};
  for (std::size_t i = 0; i < tail.size(); ++i) CHECK(v.entry(2 + i).name == tail[i]);

  CHECK(v.index_of(xxh64("Primitive2")) == 5);
  CHECK(v.index_of(xxh64("blank")) == 0);
  CHECK(v.index_of(xxh64("data")) == 1);
  CHECK_FALSE(v.index_of(xxh64("UnseenPrimitive")).has_value());

  SUBCASE("conflicting definitions are rejected") {
    PipelineGraph other = minimal_chain();
    other.nodes[1] = prim("StandardScaler", PrimitiveFamily::feature_engineering);
    CHECK_THROWS_WITH_AS(PrimitiveVocabulary::from_pipelines({minimal_chain(), other}),
                         doctest::Contains("conflicting"), Error);
  }
}

TEST_CASE("vocabulary entries round trip through from_entries") {
  const PrimitiveVocabulary v = PrimitiveVocabulary::from_pipelines({reference_tree()});
  const PrimitiveVocabulary rebuilt = PrimitiveVocabulary::from_entries(v.entries());
  CHECK(rebuilt == v);

  SUBCASE("missing reserved prefix") {
    std::vector<VocabularyEntry> entries = v.entries();
    entries.erase(entries.begin());
    CHECK_THROWS_AS(PrimitiveVocabulary::from_entries(entries), Error);
  }
  SUBCASE("unsorted tail") {
    std::vector<VocabularyEntry> entries = v.entries();
    std::swap(entries[2], entries[3]);
    CHECK_THROWS_WITH_AS(PrimitiveVocabulary::from_entries(entries),
                         doctest::Contains("sorted"), Error);
  }
  SUBCASE("stale stored token") {
    std::vector<VocabularyEntry> entries = v.entries();
    entries[2].token ^= 1;
    CHECK_THROWS_WITH_AS(PrimitiveVocabulary::from_entries(entries),
                         doctest::Contains("stale"), Error);
  }
  SUBCASE("special family in the tail") {
    std::vector<VocabularyEntry> entries = v.entries();
    entries[2].family = PrimitiveFamily::special;
    CHECK_THROWS_AS(PrimitiveVocabulary::from_entries(entries), Error);
  }
}

TEST_CASE("featurize_sequence lays out slot pairs then bag counts") {
  const PipelineGraph g = minimal_chain();
  const PrimitiveVocabulary v = PrimitiveVocabulary::from_pipelines({g});
  REQUIRE(v.size() == 4);  // blank, data, LogisticRegression, StandardScaler

  const PipelineSequence seq = encode_pipeline(g, 4);
  const std::vector<double> row = featurize_sequence(seq, v);
  REQUIRE(row.size() == 2 * 4 + 4);

  const auto family_ordinal = [](PrimitiveFamily f) {
    return static_cast<double>(static_cast<int>(f));
  };
  // Slot pairs: (index, family) per emitted token.
  CHECK(row[0] == 2.0);  // LogisticRegression
  CHECK(row[1] == family_ordinal(PrimitiveFamily::predictive_model));
  CHECK(row[2] == 3.0);  // StandardScaler
  CHECK(row[3] == family_ordinal(PrimitiveFamily::data_preprocessing));
  CHECK(row[4] == 1.0);  // data
  CHECK(row[5] == family_ordinal(PrimitiveFamily::special));
  CHECK(row[6] == 0.0);  // blank padding
  CHECK(row[7] == family_ordinal(PrimitiveFamily::special));
  // Bag counts in vocabulary order: blank, data, LogisticRegression, StandardScaler.
  CHECK(row[8] == 1.0);
  CHECK(row[9] == 1.0);
  CHECK(row[10] == 1.0);
  CHECK(row[11] == 1.0);

  SUBCASE("bag section always sums to the slot count") {
    double bag_sum = 0.0;
    for (std::size_t i = 2 * 4; i < row.size(); ++i) bag_sum += row[i];
    CHECK(bag_sum == 4.0);
  }
  SUBCASE("token count must match the slot count") {
    PipelineSequence broken = seq;
    broken.tokens.pop_back();
    CHECK_THROWS_AS(featurize_sequence(broken, v), Error);
  }
}

TEST_CASE("unknown tokens map to the blank index and are counted") {
  const PipelineGraph known = minimal_chain();
  const PrimitiveVocabulary v = PrimitiveVocabulary::from_pipelines({known});
  PipelineGraph novel = minimal_chain();
  novel.nodes[1] = prim("BrandNewScaler", PrimitiveFamily::data_preprocessing);

  std::size_t unknown = 0;
  const std::vector<double> row =
      featurize_sequence(encode_pipeline(novel, 3), v, &unknown);
  CHECK(unknown == 1);
  CHECK(row[2] == 0.0);  // second slot fell back to the blank index
  CHECK(row[2 * 3 + 0] == 1.0);  // and was counted in the blank bag bucket

  std::size_t none = 0;
  featurize_sequence(encode_pipeline(known, 3), v, &none);
  CHECK(none == 0);
}

TEST_CASE("same primitive multiset, different topology: bags agree, slots differ") {
  const Primitive a = prim("PCA", PrimitiveFamily::feature_preprocessing);
  const Primitive b = prim("ZeroCount", PrimitiveFamily::feature_engineering);
  const Primitive m = prim("LinearSVC", PrimitiveFamily::predictive_model);
  const PipelineGraph g1 = chain({data_primitive(), a, b, m});
  const PipelineGraph g2 = chain({data_primitive(), b, a, m});
  const PrimitiveVocabulary v = PrimitiveVocabulary::from_pipelines({g1, g2});

  const std::vector<double> r1 = featurize_sequence(encode_pipeline(g1, 4), v);
  const std::vector<double> r2 = featurize_sequence(encode_pipeline(g2, 4), v);
  REQUIRE(r1.size() == r2.size());
  const std::size_t bag_start = 2 * 4;
  CHECK(std::vector<double>(r1.begin() + bag_start, r1.end()) ==
        std::vector<double>(r2.begin() + bag_start, r2.end()));
  CHECK(std::vector<double>(r1.begin(), r1.begin() + bag_start) !=
        std::vector<double>(r2.begin(), r2.begin() + bag_start));
}

TEST_CASE("pipeline JSON round trips and resolves arbitrary node ids") {
  const PipelineGraph g = reference_tree();
  const PipelineGraph back = pipeline_from_json_text(pipeline_to_json_text(g));
  CHECK(back == g);

  SUBCASE("ids are labels, not positions") {
    const std::string text = R"({
      "nodes": [
        {"id": 30, "name": "data", "family": "special"},
        {"id": 10, "name": "GaussianNB", "family": "predictive_model"},
        {"id": 20, "name": "RFE", "family": "feature_preprocessing"}
      ],
      "edges": [[30, 20], [20, 10]]
    })";
    const PipelineGraph parsed = pipeline_from_json_text(text);
    REQUIRE(validate_pipeline(parsed).ok());
    CHECK(emitted_names(parsed) ==
          std::vector<std::string>{"GaussianNB", "RFE", "data"});
  }
  SUBCASE("duplicate ids are rejected") {
    const std::string text = R"({"nodes":[{"id":1,"name":"data","family":"special"},
      {"id":1,"name":"GaussianNB","family":"predictive_model"}],"edges":[[1,1]]})";
    CHECK_THROWS_WITH_AS(pipeline_from_json_text(text),
                         doctest::Contains("duplicate"), Error);
  }
  SUBCASE("edges must reference declared ids") {
    const std::string text = R"({"nodes":[{"id":0,"name":"data","family":"special"}],
      "edges":[[0,7]]})";
    CHECK_THROWS_WITH_AS(pipeline_from_json_text(text),
                         doctest::Contains("does not exist"), Error);
  }
  SUBCASE("malformed documents are rejected") {
    CHECK_THROWS_AS(pipeline_from_json_text("not json"), Error);
    CHECK_THROWS_AS(pipeline_from_json_text("[1,2,3]"), Error);
    CHECK_THROWS_AS(pipeline_from_json_text(R"({"nodes":[],"edges":[[0]]})"), Error);
    CHECK_THROWS_AS(pipeline_from_json_text(
                        R"({"nodes":[{"id":0,"name":"X","family":"banana"}],"edges":[]})"),
                    Error);
    CHECK_THROWS_AS(pipeline_from_json_text(
                        R"({"nodes":[{"id":0,"family":"special"}],"edges":[]})"),
                    Error);
  }
}
