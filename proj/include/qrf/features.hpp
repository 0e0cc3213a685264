#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qrf/types.hpp"

namespace qrf {

struct VoltageGrid {
  double v_min = 2.0;
  double v_max = 3.5;
  int n_points = 1000;

  double step() const { return (v_max - v_min) / (n_points - 1); }
  std::vector<double> points() const;
  void validate() const;
};

inline constexpr int kFeatureCount = 33;

// Fixed column order of the engineered features. Index layout:
//   0..3   min/var/skew/kurt of dQ(V) between cycles w and r
//   4..5   dQ/dV highest-peak amplitude and position shift (w minus r)
//   6..9   min/var/skew/kurt of dT(V) between cycles w and r
//   10..13 min/max/mean/var of T(V) at cycle r
//   14..17 min/max/mean/var of T(V) at cycle w
//   18..21 differences of the temperature stats (w minus r)
//   22..23 slope/intercept of the capacity fade fit over cycles [2, w]
//   24..27 capacity at cycle 2, at cycle w, max-minus-cycle-2, mean charge
//          time over cycles 1-5
//   28..32 internal resistance: min/max over [2, w], at 2, at w, w minus 2
const std::array<std::string, kFeatureCount>& feature_names();

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

struct FeatureConfig {
  int r = 10;
  int w = 100;
  VoltageGrid grid;
  bool drop_ir_features = false;
};

enum class CurveQuantity { capacity, temperature };

// Keeps the strictly-decreasing-voltage subsequence of a raw discharge curve
// (first sample always kept; later duplicates and upward blips dropped).
std::vector<DischargeCurveSample> clean_curve(
    std::span<const DischargeCurveSample> curve);

// Linear interpolation of the chosen quantity onto the grid voltages;
// grid points outside the sampled span clamp to the nearest sample.
std::vector<double> interp_curve(std::span<const DischargeCurveSample> curve,
                                 const VoltageGrid& grid, CurveQuantity q);

std::vector<double> interp_q_of_v(std::span<const DischargeCurveSample> curve,
                                  const VoltageGrid& grid);

// Pointwise (cycle w) - (cycle r) of the chosen quantity on the grid.
std::vector<double> delta_curve(const CellRecord& cell, CurveQuantity q, int r,
                                int w, const VoltageGrid& grid);

struct SummaryStats {
  double min = 0.0;
  double var = 0.0;
  double skew = 0.0;  // m3 / m2^1.5, 0 when m2 == 0
  double kurt = 0.0;  // excess, m4 / m2^2 - 3, 0 when m2 == 0
};

// Population moments.
SummaryStats summary_stats(std::span<const double> v);

struct RangeStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

RangeStats range_stats(std::span<const double> v);

struct PeakShift {
  double amplitude_shift = 0.0;  // Ah/V
  double position_shift = 0.0;   // V
};

// Incremental capacity -dQ/dV on the grid: interpolated Q(V) smoothed by a
// 9-point centered moving average, then central differences. Interior points
// only.
std::vector<double> incremental_capacity(
    std::span<const DischargeCurveSample> curve, const VoltageGrid& grid);

PeakShift dqdv_peak_shift(const CellRecord& cell, int r, int w,
                          const VoltageGrid& grid);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// OLS of discharge capacity on cycle index over cycles [first, last].
LineFit capacity_fade_fit(const CellRecord& cell, int first, int last);

FeatureVector extract_all(const LabeledCell& cell, const FeatureConfig& cfg);

// Feature matrix for a set of labeled cells. With drop_ir_features the five
// resistance columns are omitted (p = 28).
Dataset build_matrix(const std::vector<LabeledCell>& cells,
                     const FeatureConfig& cfg);

// features.csv: cell_id,<feature names>,cycle_life
void save_features_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset load_features_csv(const std::filesystem::path& path);

}  // namespace qrf
