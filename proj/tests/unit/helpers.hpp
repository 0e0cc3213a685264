#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "qrf/types.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("qrf_test_" + tag + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Minimal cell with a linear capacity fade and no curves.
inline qrf::CellRecord make_fade_cell(const std::string& id, int n_cycles,
                                      double q0, double per_cycle_drop,
                                      double nominal = 1.1,
                                      const std::string& batch = "2017-05-12") {
  qrf::CellRecord cell;
  cell.cell_id = id;
  cell.batch_date = batch;
  cell.charging_protocol = "5.4C(70%)-3C";
  cell.nominal_capacity_ah = nominal;
  for (int n = 1; n <= n_cycles; ++n) {
    qrf::CycleSummary cyc;
    cyc.cycle_index = n;
    cyc.discharge_capacity_ah = q0 - per_cycle_drop * (n - 1);
    cyc.charge_time_min = 12.0;
    cyc.internal_resistance_ohm = 0.016;
    cell.cycles.push_back(cyc);
  }
  return cell;
}

// Curve sampled at grid voltages in decreasing order from a callable
// q(v), t(v).
template <typename QFn, typename TFn>
std::vector<qrf::DischargeCurveSample> make_curve(
    const std::vector<double>& ascending_voltages, QFn q, TFn t) {
  std::vector<qrf::DischargeCurveSample> curve;
  curve.reserve(ascending_voltages.size());
  for (std::size_t k = ascending_voltages.size(); k-- > 0;) {
    const double v = ascending_voltages[k];
    curve.push_back({v, q(v), t(v)});
  }
  return curve;
}

}  // namespace testutil
