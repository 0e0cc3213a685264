#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qrf {

// One point of a discharge curve: capacity discharged and cell temperature by
// the time the terminal voltage has fallen to voltage_v.
struct DischargeCurveSample {
  double voltage_v = 0.0;
  double capacity_ah = 0.0;
  double temperature_c = 0.0;
};

struct CycleSummary {
  int cycle_index = 0;
  double discharge_capacity_ah = 0.0;
  double charge_time_min = 0.0;
  std::optional<double> internal_resistance_ohm;
  std::vector<DischargeCurveSample> curve;  // ordered by decreasing voltage
};

struct CellRecord {
  std::string cell_id;
  std::string batch_date;  // ISO-8601
  std::string charging_protocol;
  double nominal_capacity_ah = 0.0;
  std::vector<CycleSummary> cycles;  // cycle_index strictly increasing

  const CycleSummary* find_cycle(int cycle_index) const;
  int max_cycle_index() const {
    return cycles.empty() ? 0 : cycles.back().cycle_index;
  }
};

struct LabeledCell {
  CellRecord cell;
  int cycle_life = 0;  // first cycle strictly below the EOL threshold
};

struct DatasetSplit {
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted
  std::uint64_t seed = 0;
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<double> row(std::size_t i) {
    return {values.data() + i * cols, cols};
  }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
};

struct Dataset {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  std::vector<std::string> cell_ids;

  std::size_t n() const { return x.rows; }
  std::size_t p() const { return x.cols; }

  Dataset subset(std::span<const std::size_t> rows) const;
  // Rows whose cell_id is in `ids`, keeping dataset order.
  Dataset subset_ids(std::span<const std::string> ids) const;
};

}  // namespace qrf
