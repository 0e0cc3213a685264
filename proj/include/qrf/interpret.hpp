#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qrf/forest.hpp"
#include "qrf/types.hpp"

namespace qrf {

enum class ScoreKind { r2, neg_rmse };

using BatchPredictFn = std::function<std::vector<double>(const Matrix&)>;

struct ImportanceEntry {
  std::size_t feature_index = 0;
  std::string feature_name;
  double importance = 0.0;
  std::vector<double> repeat_scores;  // s_{j,m}
};

struct ImportanceReport {
  std::vector<ImportanceEntry> entries;  // sorted descending by importance
  double reference_score = 0.0;          // s0
  int repeats = 0;                       // M
  std::string score_name;
};

// Reference score on the intact data, then M column shuffles per feature;
// importance is the mean score drop. A feature the model never reads scores
// exactly 0.
ImportanceReport permutation_importance(const BatchPredictFn& predict_fn,
                                        const Dataset& ds, ScoreKind score,
                                        int repeats, std::uint64_t seed);

struct Histogram {
  std::vector<double> bin_left;
  std::vector<double> bin_right;
  std::vector<std::size_t> counts;
};

struct PDPResult {
  std::size_t feature_index = 0;
  std::string feature_name;
  std::vector<double> grid;          // ascending
  std::vector<double> mean_curve;
  std::vector<double> quantile_levels;             // ascending
  std::vector<std::vector<double>> quantile_curves;  // one per level
  Histogram histogram;  // observed values of the swept feature
};

// Partial dependence of the mean and quantile predictors on feature j: each
// grid value is substituted into every row and predictions are averaged.
// Empty grid_spec means 50 quantile-spaced points over the observed column.
PDPResult pdp(const Forest& forest, const Dataset& ds, std::size_t feature,
              std::span<const double> grid_spec = {},
              std::span<const double> alphas = {}, int hist_bins = 20);

}  // namespace qrf
