#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrf/forest.hpp"
#include "qrf/types.hpp"

// Synthetic data with analytically known conditional distributions, plus a
// brute-force reference for the forest weight computation. These are the
// testing oracles for the statistical machinery.

namespace qrf {

enum class NoiseKind { normal, lognormal };

// y = 1000*x1 + (50 + 200*x2) * e with e standard normal (or exp(e/2) for the
// lognormal variant). Eight pure-noise features pad the design to p = 10.
struct HeteroscedasticData {
  Dataset data;
  NoiseKind noise = NoiseKind::normal;

  double true_quantile(std::span<const double> x, double alpha) const;
  double true_quantile(std::size_t row, double alpha) const;
};

HeteroscedasticData gen_heteroscedastic(std::size_t n, std::uint64_t seed,
                                        NoiseKind noise = NoiseKind::normal);

// y = g1(x1) + g2(x2) + 30*e; g1 monotone sigmoid, g2 a sine bump; three
// pure-noise features pad the design to p = 5.
struct AdditiveData {
  Dataset data;
  static double g1(double u);
  static double g2(double u);
};

AdditiveData gen_additive(std::size_t n, std::uint64_t seed);

struct SynthCellOptions {
  int n_cells = 24;
  std::uint64_t seed = 1;
  std::vector<int> curve_cycles = {10, 100};  // cycles that carry curves
  int truth_r = 10;  // pair the closed-form truths are evaluated for
  int truth_w = 100;
  double drift_min = 0.2;
  double drift_max = 1.8;
  // With signal_onset > 0, curve drift starts only after that cycle and the
  // capacity fade is identical across cells, so early windows carry no signal.
  int signal_onset = 0;
};

// Closed-form per-cell ground truth for the (truth_r, truth_w) window,
// evaluated on the default voltage grid.
struct SynthCellTruth {
  std::string cell_id;
  double drift = 0.0;  // the parameter cycle life decreases in
  int cycle_life = 0;
  double fade_slope = 0.0;
  double fade_intercept = 0.0;
  double dq_min = 0.0;
  double dq_var = 0.0;
  double peak_amp_shift = 0.0;
  double peak_pos_shift = 0.0;
  double dt_min = 0.0;
  double dt_var = 0.0;
  double q_cycle_2 = 0.0;
  double q_cycle_w = 0.0;
  double charge_time_mean_1_5 = 0.0;
};

struct SynthCells {
  std::vector<CellRecord> cells;
  std::vector<SynthCellTruth> truth;  // aligned with cells
};

// Discharge curves from a parametric family (Gaussian incremental-capacity
// peak over a linear tail) whose grid features are closed-form; capacity fade
// is exactly linear and crosses 80% of nominal at the assigned cycle life.
SynthCells gen_synthetic_cells(const SynthCellOptions& opts);

// Independent reimplementation of the forest weights: naive per-tree leaf
// enumeration sharing no traversal code with forest.cpp. Intended for small
// fixtures in tests.
std::vector<double> brute_force_weights(const Forest& forest,
                                        std::span<const double> x);

}  // namespace qrf
