#pragma once

#include <array>
#include <cstddef>

#include "rankml/tabular.hpp"

namespace rankml {

inline constexpr int kMetaFeatureSchemaVersion = 1;
inline constexpr std::size_t kMetaFeatureCount = 24;

// Slot layout of the dataset meta-feature vector. Slots 0-13 are descriptive,
// 14-23 are correlation-based. Undefined statistics (constant columns, too few
// rows, no numeric features, ...) are 0 by convention, so every slot is finite
// for every loadable dataset.
enum MetaFeatureSlot : std::size_t {
  kMfRows = 0,               // number of rows
  kMfFeatures = 1,           // number of feature columns (target excluded)
  kMfNumericFeatures = 2,
  kMfCategoricalFeatures = 3,
  kMfFeatureRowRatio = 4,    // features / rows
  kMfMissingCellFraction = 5,    // missing feature cells / all feature cells
  kMfColumnsWithMissing = 6,     // fraction of feature columns with >=1 missing
  kMfTargetCardinality = 7,      // classification only, else 0
  kMfMajorityClassFraction = 8,  // classification only, else 0
  kMfTargetEntropy = 9,          // normalized to [0,1]; classification only
  kMfTargetVariance = 10,        // regression only, else 0
  kMfMeanOfMeans = 11,           // mean over numeric features of cell means
  kMfMeanOfStds = 12,            // mean over numeric features of cell stddevs
  kMfMeanCategoricalCardinality = 13,
  kMfTargetCorrMean = 14,    // |pearson(feature, target)| aggregations
  kMfTargetCorrStd = 15,
  kMfTargetCorrMax = 16,
  kMfTargetCorrMin = 17,
  kMfPairCorrMean = 18,      // |pearson(feature_i, feature_j)| aggregations
  kMfPairCorrStd = 19,
  kMfPairCorrMax = 20,
  kMfHighCorrPairFraction = 21,    // fraction of pairs with |r| > 0.8
  kMfPredictiveFeatureFraction = 22,  // fraction of features with |r_target| > 0.5
  kMfPairCount = 23,         // numeric feature pairs evaluated
};

struct MetaFeatureVector {
  std::array<double, kMetaFeatureCount> values{};
  int schema_version = kMetaFeatureSchemaVersion;

  bool operator==(const MetaFeatureVector&) const = default;
};

// Pure function of the dataset content. Correlations use pairwise-complete
// rows; any correlation over fewer than 2 complete rows or involving a
// zero-variance column is 0. Categorical feature columns are excluded from
// the correlation slots; a classification target enters correlations as
// integer codes assigned in sorted label order. All accumulations run over
// canonically ordered values, so the result is invariant under row
// permutation, bit for bit.
MetaFeatureVector extract_meta_features(const TabularDataset& d);

}  // namespace rankml
