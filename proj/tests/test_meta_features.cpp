#include "rankml/meta_features.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <doctest.h>

#include "rankml/rng.hpp"
#include "rankml/tabular.hpp"

using namespace rankml;

namespace {

Column numeric_column(std::string name, std::vector<std::optional<double>> cells) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::numeric;
  c.numbers = std::move(cells);
  return c;
}

Column categorical_column(std::string name,
                          std::vector<std::optional<std::string>> cells) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::categorical;
  c.labels = std::move(cells);
  return c;
}

TabularDataset make_dataset(std::vector<Column> columns, std::size_t target_index,
                            Task task) {
  TabularDataset d;
  d.name = "inmemory";
  d.n_rows = columns.at(0).size();
  d.target_index = target_index;
  d.task = task;
  d.columns = std::move(columns);
  return d;
}

// Independent Pearson oracle: plain unsorted accumulation over complete pairs.
double pearson_oracle(const std::vector<std::optional<double>>& xs,
                      const std::vector<double>& ys) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i].has_value()) continue;
    x.push_back(*xs[i]);
    y.push_back(ys[i]);
  }
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Deterministic fixture with both column kinds, missing cells, and enough rows
// for the invariance properties to bite.
TabularDataset property_fixture() {
  SplitMix64 rng(4242);
  const std::size_t n = 60;
  std::vector<std::optional<double>> a(n), b(n), c(n);
  std::vector<std::optional<std::string>> cat(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double base = rng.next_gaussian(1.0);
    if (rng.next_unit() > 0.1) a[i] = base + rng.next_gaussian(0.3);
    if (rng.next_unit() > 0.15) b[i] = -2.0 * base + rng.next_gaussian(0.5);
    c[i] = rng.next_uniform(-5.0, 5.0);
    if (rng.next_unit() > 0.05) cat[i] = "g" + std::to_string(rng.next_below(4));
    y[i] = base > 0.0 ? "pos" : "neg";
  }
  return make_dataset({numeric_column("a", a), numeric_column("b", b),
                       numeric_column("c", c), categorical_column("cat", cat),
                       categorical_column("y", y)},
                      4, Task::classification);
}

}  // namespace

TEST_CASE("descriptive slots on a two-class 6/2 target") {
  std::vector<std::optional<double>> x;
  std::vector<std::optional<std::string>> y;
  for (int i = 0; i < 8; ++i) {
    x.push_back(static_cast<double>(i + 1));
    y.push_back(i < 6 ? "yes" : "no");
  }
  const TabularDataset d =
      make_dataset({numeric_column("x", x), categorical_column("y", y)}, 1,
                   Task::classification);
  const MetaFeatureVector mf = extract_meta_features(d);

  CHECK(mf.schema_version == kMetaFeatureSchemaVersion);
  CHECK(mf.values[kMfRows] == 8.0);
  CHECK(mf.values[kMfFeatures] == 1.0);
  CHECK(mf.values[kMfNumericFeatures] == 1.0);
  CHECK(mf.values[kMfCategoricalFeatures] == 0.0);
  CHECK(mf.values[kMfFeatureRowRatio] == 1.0 / 8.0);
  CHECK(mf.values[kMfMissingCellFraction] == 0.0);
  CHECK(mf.values[kMfTargetCardinality] == 2.0);
  CHECK(mf.values[kMfMajorityClassFraction] == 0.75);
  // Normalized entropy of p = (0.75, 0.25): -(sum p log2 p) / log2(2).
  CHECK(mf.values[kMfTargetEntropy] ==
        doctest::Approx(0.8112781244591328).epsilon(1e-14));
  const double oracle =
      -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25)) / std::log2(2.0);
  CHECK(mf.values[kMfTargetEntropy] == doctest::Approx(oracle).epsilon(1e-15));
  CHECK(mf.values[kMfTargetVariance] == 0.0);  // classification leaves slot 10 alone
}

TEST_CASE("missing-cell fractions count feature cells only") {
  // 4 rows x 3 feature columns with exactly one missing feature cell -> 1/12.
  const TabularDataset d = make_dataset(
      {numeric_column("a", {1.0, 2.0, std::nullopt, 4.0}),
       numeric_column("b", {0.0, 0.0, 1.0, 1.0}),
       categorical_column("c", {"u", "u", "v", "v"}),
       numeric_column("y", {1.0, 2.0, 3.0, 4.0})},
      3, Task::regression);
  const MetaFeatureVector mf = extract_meta_features(d);
  CHECK(mf.values[kMfMissingCellFraction] == 1.0 / 12.0);
  CHECK(mf.values[kMfColumnsWithMissing] == 1.0 / 3.0);
  CHECK(mf.values[kMfFeatures] == 3.0);
  CHECK(mf.values[kMfNumericFeatures] == 2.0);
  CHECK(mf.values[kMfCategoricalFeatures] == 1.0);
}

TEST_CASE("perfectly collinear columns saturate the correlation slots") {
  const TabularDataset d = make_dataset(
      {numeric_column("x", {1.0, 2.0, 3.0, 4.0}),
       numeric_column("z", {2.0, 4.0, 6.0, 8.0}),
       numeric_column("y", {1.0, 2.0, 3.0, 4.0})},
      2, Task::regression);
  const MetaFeatureVector mf = extract_meta_features(d);
  CHECK(mf.values[kMfRows] == 4.0);
  CHECK(mf.values[kMfTargetCorrMean] == 1.0);
  CHECK(mf.values[kMfTargetCorrStd] == 0.0);
  CHECK(mf.values[kMfTargetCorrMax] == 1.0);
  CHECK(mf.values[kMfTargetCorrMin] == 1.0);
  CHECK(mf.values[kMfPairCorrMean] == 1.0);
  CHECK(mf.values[kMfPairCorrMax] == 1.0);
  CHECK(mf.values[kMfHighCorrPairFraction] == 1.0);
  CHECK(mf.values[kMfPredictiveFeatureFraction] == 1.0);
  CHECK(mf.values[kMfPairCount] == 1.0);
  // Population variance of {1,2,3,4}.
  CHECK(mf.values[kMfTargetVariance] == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(mf.values[kMfTargetCardinality] == 0.0);  // regression leaves slots 7-9 alone
  CHECK(mf.values[kMfMajorityClassFraction] == 0.0);
  CHECK(mf.values[kMfTargetEntropy] == 0.0);
}

TEST_CASE("correlations use pairwise-complete rows") {
  const std::vector<std::optional<double>> x = {1.0, 2.0, std::nullopt, 4.0, 5.0};
  const std::vector<std::optional<double>> z = {2.0, std::nullopt, 1.0, 3.0, 7.0};
  const std::vector<double> y = {1.0, 3.0, 5.0, 4.0, 2.0};
  std::vector<std::optional<double>> ycol(y.begin(), y.end());
  const TabularDataset d = make_dataset(
      {numeric_column("x", x), numeric_column("z", z), numeric_column("y", ycol)},
      2, Task::regression);
  const MetaFeatureVector mf = extract_meta_features(d);

  const double rx = std::abs(pearson_oracle(x, y));
  const double rz = std::abs(pearson_oracle(z, y));
  CHECK(mf.values[kMfTargetCorrMax] ==
        doctest::Approx(std::max(rx, rz)).epsilon(1e-12));
  CHECK(mf.values[kMfTargetCorrMin] ==
        doctest::Approx(std::min(rx, rz)).epsilon(1e-12));
  CHECK(mf.values[kMfTargetCorrMean] ==
        doctest::Approx((rx + rz) / 2.0).epsilon(1e-12));

  // Feature pair (x, z): only rows where both are present.
  const double rxz = std::abs(pearson_oracle(
      {1.0, std::nullopt, std::nullopt, 4.0, 5.0}, {2.0, 0.0, 0.0, 3.0, 7.0}));
  CHECK(mf.values[kMfPairCorrMax] == doctest::Approx(rxz).epsilon(1e-12));
  CHECK(mf.values[kMfPairCount] == 1.0);
}

TEST_CASE("degenerate statistics resolve to zero") {
  SUBCASE("constant feature has zero correlation by convention") {
    const TabularDataset d = make_dataset(
        {numeric_column("const", {3.0, 3.0, 3.0, 3.0}),
         numeric_column("y", {1.0, 2.0, 3.0, 4.0})},
        1, Task::regression);
    const MetaFeatureVector mf = extract_meta_features(d);
    CHECK(mf.values[kMfTargetCorrMean] == 0.0);
    CHECK(mf.values[kMfTargetCorrMax] == 0.0);
    CHECK(mf.values[kMfPredictiveFeatureFraction] == 0.0);
  }
  SUBCASE("single numeric feature leaves the pair slots at zero") {
    const TabularDataset d = make_dataset(
        {numeric_column("x", {1.0, 2.0, 3.0}), numeric_column("y", {3.0, 1.0, 2.0})},
        1, Task::regression);
    const MetaFeatureVector mf = extract_meta_features(d);
    CHECK(mf.values[kMfPairCorrMean] == 0.0);
    CHECK(mf.values[kMfPairCorrStd] == 0.0);
    CHECK(mf.values[kMfPairCorrMax] == 0.0);
    CHECK(mf.values[kMfPairCount] == 0.0);
  }
  SUBCASE("no numeric features leaves means and correlations at zero") {
    const TabularDataset d = make_dataset(
        {categorical_column("c", {"a", "b", "a"}),
         categorical_column("y", {"p", "q", "p"})},
        1, Task::classification);
    const MetaFeatureVector mf = extract_meta_features(d);
    CHECK(mf.values[kMfMeanOfMeans] == 0.0);
    CHECK(mf.values[kMfMeanOfStds] == 0.0);
    CHECK(mf.values[kMfTargetCorrMean] == 0.0);
    for (std::size_t slot = 0; slot < kMetaFeatureCount; ++slot)
      CHECK(std::isfinite(mf.values[slot]));
  }
  SUBCASE("single-class target has zero entropy and full majority") {
    const TabularDataset d = make_dataset(
        {numeric_column("x", {1.0, 2.0}), categorical_column("y", {"only", "only"})},
        1, Task::classification);
    const MetaFeatureVector mf = extract_meta_features(d);
    CHECK(mf.values[kMfTargetCardinality] == 1.0);
    CHECK(mf.values[kMfMajorityClassFraction] == 1.0);
    CHECK(mf.values[kMfTargetEntropy] == 0.0);
  }
}

TEST_CASE("per-feature means, stddevs, and categorical cardinalities") {
  const TabularDataset d = make_dataset(
      {numeric_column("a", {1.0, 2.0, 3.0, 4.0}),     // mean 2.5, pop std sqrt(1.25)
       numeric_column("b", {10.0, 10.0, 10.0, 10.0}), // mean 10, std 0
       categorical_column("c2", {"u", "v", "u", std::nullopt}),   // 2 distinct
       categorical_column("c3", {"p", "q", "r", "p"}),            // 3 distinct
       numeric_column("y", {0.0, 1.0, 0.0, 1.0})},
      4, Task::regression);
  const MetaFeatureVector mf = extract_meta_features(d);
  CHECK(mf.values[kMfMeanOfMeans] == doctest::Approx(6.25).epsilon(1e-15));
  CHECK(mf.values[kMfMeanOfStds] ==
        doctest::Approx(std::sqrt(1.25) / 2.0).epsilon(1e-15));
  CHECK(mf.values[kMfMeanCategoricalCardinality] == 2.5);
}

TEST_CASE("row permutation leaves the vector bit-identical") {
  const TabularDataset d = property_fixture();
  const MetaFeatureVector base = extract_meta_features(d);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL}) {
    const TabularDataset shuffled =
        select_rows(d, shuffled_indices(d.n_rows, seed), "shuffled");
    const MetaFeatureVector permuted = extract_meta_features(shuffled);
    CHECK(permuted.values == base.values);  // exact, not approximate
  }
}

TEST_CASE("doubling numeric features is invisible to correlation slots") {
  const TabularDataset d = property_fixture();
  TabularDataset scaled = d;
  for (Column& col : scaled.columns) {
    if (col.kind != ColumnKind::numeric) continue;
    for (auto& cell : col.numbers)
      if (cell.has_value()) *cell *= 2.0;
  }
  const MetaFeatureVector base = extract_meta_features(d);
  const MetaFeatureVector twice = extract_meta_features(scaled);
  for (std::size_t slot = kMfTargetCorrMean; slot <= kMfPairCount; ++slot) {
    CAPTURE(slot);
    CHECK(twice.values[slot] == base.values[slot]);  // power-of-two scaling is exact
  }
  CHECK(twice.values[kMfMeanOfMeans] == 2.0 * base.values[kMfMeanOfMeans]);
  CHECK(twice.values[kMfMeanOfStds] == 2.0 * base.values[kMfMeanOfStds]);
  CHECK(twice.values[kMfRows] == base.values[kMfRows]);
  CHECK(twice.values[kMfMissingCellFraction] == base.values[kMfMissingCellFraction]);
}

TEST_CASE("classification targets enter correlations as sorted label codes") {
  // Two datasets whose labels differ only by renaming; the rename reverses the
  // sorted order, so the codes flip and the signed correlation flips with them
  // -- but the |r| aggregations must be unchanged.
  const std::vector<std::optional<double>> x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const TabularDataset d1 = make_dataset(
      {numeric_column("x", x),
       categorical_column("y", {"a", "a", "a", "b", "b", "b"})},
      1, Task::classification);
  const TabularDataset d2 = make_dataset(
      {numeric_column("x", x),
       categorical_column("y", {"z", "z", "z", "b", "b", "b"})},
      1, Task::classification);
  const MetaFeatureVector m1 = extract_meta_features(d1);
  const MetaFeatureVector m2 = extract_meta_features(d2);
  CHECK(m1.values[kMfTargetCorrMax] == m2.values[kMfTargetCorrMax]);
  CHECK(m1.values[kMfTargetEntropy] == m2.values[kMfTargetEntropy]);

  const double expected = std::abs(
      pearson_oracle(x, {0.0, 0.0, 0.0, 1.0, 1.0, 1.0}));
  CHECK(m1.values[kMfTargetCorrMax] == doctest::Approx(expected).epsilon(1e-12));
}
