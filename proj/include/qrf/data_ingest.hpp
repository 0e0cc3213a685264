#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qrf/types.hpp"

namespace qrf {

// Expected headers of the three input tables.
//   cells.csv:  cell_id,batch_date,charging_protocol,nominal_capacity_ah
//   cycles.csv: cell_id,cycle_index,discharge_capacity_ah,charge_time_min,
//               internal_resistance_ohm   (resistance may be blank)
//   curves.csv: cell_id,cycle_index,voltage_v,discharge_capacity_ah,
//               temperature_c             (rows ordered by decreasing voltage)
std::vector<CellRecord> load_cells(const std::filesystem::path& cells_path,
                                   const std::filesystem::path& cycles_path,
                                   const std::filesystem::path& curves_path);

void save_cells(const std::vector<CellRecord>& cells,
                const std::filesystem::path& cells_path,
                const std::filesystem::path& cycles_path,
                const std::filesystem::path& curves_path);

// First cycle whose discharge capacity falls strictly below
// eol_fraction * nominal_capacity. Throws CensoredCellError if no cycle does.
LabeledCell label_cycle_life(const CellRecord& cell, double eol_fraction = 0.8);

struct LabelReport {
  std::vector<LabeledCell> labeled;
  std::vector<std::string> censored_ids;
};

// Labels every cell, collecting censored ones instead of throwing.
LabelReport label_all(const std::vector<CellRecord>& cells,
                      double eol_fraction = 0.8);

struct BatchCounts {
  int train_n = 0;
  int test_n = 0;
};

// Stratified split with exact per-batch counts; deterministic in `seed`.
// Cells beyond train_n + test_n in a batch go to neither set.
DatasetSplit split_train_test(const std::vector<LabeledCell>& cells,
                              const std::map<std::string, BatchCounts>& counts,
                              std::uint64_t seed);

// Keeps exactly the cycles with cycle_index <= w.
CellRecord truncate_to_early_cycles(const CellRecord& cell, int w);

}  // namespace qrf
