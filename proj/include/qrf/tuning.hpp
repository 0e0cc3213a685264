#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrf/data_ingest.hpp"
#include "qrf/features.hpp"
#include "qrf/forest.hpp"
#include "qrf/metrics.hpp"
#include "qrf/types.hpp"

namespace qrf {

struct SearchSpace {
  int n_trees_min = 100, n_trees_max = 1000;
  int mtry_min = 1, mtry_max = 0;  // 0 = p
  int min_leaf_min = 1, min_leaf_max = 20;
  int depth_min = 4, depth_max = 32;  // plus the unlimited option
  double sample_fraction_min = 0.5, sample_fraction_max = 1.0;
};

struct TrialResult {
  int trial_index = 0;
  Hyperparameters hp;
  double abes_cv = 0.0;
  double wall_time_s = 0.0;
};

struct LooResult {
  CalibrationCurve curve;        // pooled over all held-out rows
  std::vector<double> oof_mean;  // out-of-fold mean predictions, row-aligned
  std::vector<double> oof_median;
};

// N forests, each trained with one row held out (fold seed derived from
// hp.seed and the fold index); held-out interval coverages pooled into one
// calibration curve.
LooResult loo_xve_calibration(const Dataset& ds, const Hyperparameters& hp,
                              std::span<const double> nominal_grid,
                              int threads = 1);

struct SearchResult {
  Hyperparameters best;
  double best_abes = 0.0;
  std::vector<TrialResult> trials;
};

// Uniform sampling over the space; objective is abes(loo_xve_calibration).
// Ties keep the earlier trial.
SearchResult random_search(const Dataset& ds, const SearchSpace& space,
                           int n_trials, std::uint64_t seed,
                           std::span<const double> nominal_grid,
                           int threads = 1);

Forest refit_final(const Dataset& ds, const Hyperparameters& hp,
                   int threads = 1);

struct SweepRow {
  int w = 0;
  std::string model;  // "qrf" or "elastic_net"
  double rmse = 0.0;
  double mape = 0.0;
};

struct SweepConfig {
  DatasetSplit split;
  int r = 10;
  VoltageGrid grid;
  bool drop_ir_features = false;
  int n_trials = 25;  // per model per window
  std::uint64_t seed = 0;
  int threads = 1;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> notes;  // skipped windows, dropped cells
};

// Early-cycle sensitivity sweep: per window w, truncate + re-extract features,
// tune both model families on the fixed train split, evaluate on the fixed
// test split. Per-window failures are recorded and the sweep continues.
SweepResult sweep_early_cycles(const std::vector<LabeledCell>& cells,
                               std::span<const int> w_values,
                               const SweepConfig& cfg);

}  // namespace qrf
