#include "rankml/meta_features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace rankml {
namespace {

struct ValuePair {
  double x;
  double y;
  bool operator<(const ValuePair& o) const {
    return x != o.x ? x < o.x : y < o.y;
  }
};

// Pearson r over the given pairs; pairs are sorted first so the floating-point
// accumulation order does not depend on row order.
double pearson(std::vector<ValuePair> pairs) {
  const std::size_t n = pairs.size();
  if (n < 2) return 0.0;
  std::sort(pairs.begin(), pairs.end());
  double sx = 0.0, sy = 0.0;
  for (const auto& p : pairs) {
    sx += p.x;
    sy += p.y;
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : pairs) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Mean and population standard deviation with sorted accumulation.
std::pair<double, double> mean_std(std::vector<double> values) {
  if (values.empty()) return {0.0, 0.0};
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

}  // namespace

MetaFeatureVector extract_meta_features(const TabularDataset& d) {
  MetaFeatureVector mf;
  auto& v = mf.values;

  const double n_rows = static_cast<double>(d.n_rows);

  std::vector<std::size_t> numeric_features;
  std::vector<std::size_t> categorical_features;
  std::size_t missing_cells = 0;
  std::size_t cols_with_missing = 0;
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    if (c == d.target_index) continue;
    const Column& col = d.columns[c];
    (col.kind == ColumnKind::numeric ? numeric_features : categorical_features)
        .push_back(c);
    const std::size_t miss = col.missing_count();
    missing_cells += miss;
    if (miss > 0) ++cols_with_missing;
  }
  const std::size_t n_features = numeric_features.size() + categorical_features.size();

  v[kMfRows] = n_rows;
  v[kMfFeatures] = static_cast<double>(n_features);
  v[kMfNumericFeatures] = static_cast<double>(numeric_features.size());
  v[kMfCategoricalFeatures] = static_cast<double>(categorical_features.size());
  v[kMfFeatureRowRatio] = static_cast<double>(n_features) / n_rows;
  if (n_features > 0) {
    v[kMfMissingCellFraction] =
        static_cast<double>(missing_cells) / (static_cast<double>(n_features) * n_rows);
    v[kMfColumnsWithMissing] =
        static_cast<double>(cols_with_missing) / static_cast<double>(n_features);
  }

  // Target slots and the numeric target vector used by correlations.
  // Classification labels map to integer codes in sorted label order, which
  // keeps the codes independent of row order.
  std::vector<double> target_values(d.n_rows);
  const Column& target = d.target();
  if (d.task == Task::classification) {
    std::map<std::string, std::size_t> counts;
    for (const auto& cell : target.labels) ++counts[*cell];
    std::map<std::string, double> code;
    double next = 0.0;
    std::size_t majority = 0;
    double entropy = 0.0;
    for (const auto& [label, count] : counts) {
      code[label] = next++;
      majority = std::max(majority, count);
      const double p = static_cast<double>(count) / n_rows;
      entropy -= p * std::log2(p);
    }
    for (std::size_t r = 0; r < d.n_rows; ++r)
      target_values[r] = code[*target.labels[r]];
    const double cardinality = static_cast<double>(counts.size());
    v[kMfTargetCardinality] = cardinality;
    v[kMfMajorityClassFraction] = static_cast<double>(majority) / n_rows;
    if (counts.size() > 1) v[kMfTargetEntropy] = entropy / std::log2(cardinality);
  } else {
    for (std::size_t r = 0; r < d.n_rows; ++r)
      target_values[r] = *target.numbers[r];
    auto [mean, sd] = mean_std(target_values);
    (void)mean;
    v[kMfTargetVariance] = sd * sd;
  }

  // Per-numeric-feature cell statistics.
  {
    std::vector<double> means, stds;
    for (std::size_t c : numeric_features) {
      std::vector<double> cells;
      for (const auto& cell : d.columns[c].numbers)
        if (cell) cells.push_back(*cell);
      auto [mean, sd] = mean_std(std::move(cells));
      means.push_back(mean);
      stds.push_back(sd);
    }
    v[kMfMeanOfMeans] = mean_std(means).first;
    v[kMfMeanOfStds] = mean_std(stds).first;
  }
  {
    std::vector<double> cardinalities;
    for (std::size_t c : categorical_features) {
      std::vector<std::string_view> seen;
      for (const auto& cell : d.columns[c].labels)
        if (cell) seen.push_back(*cell);
      std::sort(seen.begin(), seen.end());
      seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
      cardinalities.push_back(static_cast<double>(seen.size()));
    }
    v[kMfMeanCategoricalCardinality] = mean_std(std::move(cardinalities)).first;
  }

  // Feature-target correlations (numeric features only).
  if (!numeric_features.empty()) {
    std::vector<double> abs_r;
    std::size_t predictive = 0;
    for (std::size_t c : numeric_features) {
      std::vector<ValuePair> pairs;
      for (std::size_t r = 0; r < d.n_rows; ++r) {
        const auto& cell = d.columns[c].numbers[r];
        if (cell) pairs.push_back({*cell, target_values[r]});
      }
      const double r_abs = std::abs(pearson(std::move(pairs)));
      abs_r.push_back(r_abs);
      if (r_abs > 0.5) ++predictive;
    }
    auto [mean, sd] = mean_std(abs_r);
    v[kMfTargetCorrMean] = mean;
    v[kMfTargetCorrStd] = sd;
    v[kMfTargetCorrMax] = *std::max_element(abs_r.begin(), abs_r.end());
    v[kMfTargetCorrMin] = *std::min_element(abs_r.begin(), abs_r.end());
    v[kMfPredictiveFeatureFraction] =
        static_cast<double>(predictive) / static_cast<double>(abs_r.size());
  }

  // Feature-feature correlations.
  if (numeric_features.size() >= 2) {
    std::vector<double> abs_r;
    std::size_t high = 0;
    for (std::size_t a = 0; a < numeric_features.size(); ++a) {
      for (std::size_t b = a + 1; b < numeric_features.size(); ++b) {
        const Column& ca = d.columns[numeric_features[a]];
        const Column& cb = d.columns[numeric_features[b]];
        std::vector<ValuePair> pairs;
        for (std::size_t r = 0; r < d.n_rows; ++r) {
          if (ca.numbers[r] && cb.numbers[r])
            pairs.push_back({*ca.numbers[r], *cb.numbers[r]});
        }
        const double r_abs = std::abs(pearson(std::move(pairs)));
        abs_r.push_back(r_abs);
        if (r_abs > 0.8) ++high;
      }
    }
    auto [mean, sd] = mean_std(abs_r);
    v[kMfPairCorrMean] = mean;
    v[kMfPairCorrStd] = sd;
    v[kMfPairCorrMax] = *std::max_element(abs_r.begin(), abs_r.end());
    v[kMfHighCorrPairFraction] =
        static_cast<double>(high) / static_cast<double>(abs_r.size());
    v[kMfPairCount] = static_cast<double>(abs_r.size());
  }

  return mf;
}

}  // namespace rankml
