#include "qrf/data_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "qrf/csv.hpp"
#include "qrf/errors.hpp"
#include "qrf/rng.hpp"

namespace qrf {

const CycleSummary* CellRecord::find_cycle(int cycle_index) const {
  const auto it = std::lower_bound(
      cycles.begin(), cycles.end(), cycle_index,
      [](const CycleSummary& c, int idx) { return c.cycle_index < idx; });
  if (it == cycles.end() || it->cycle_index != cycle_index) return nullptr;
  return &*it;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.x = Matrix(rows.size(), p());
  out.y.reserve(rows.size());
  out.cell_ids.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    std::copy_n(x.row(i).data(), p(), out.x.row(k).data());
    out.y.push_back(y[i]);
    out.cell_ids.push_back(cell_ids[i]);
  }
  return out;
}

Dataset Dataset::subset_ids(std::span<const std::string> ids) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n(); ++i) {
    if (std::find(ids.begin(), ids.end(), cell_ids[i]) != ids.end()) {
      rows.push_back(i);
    }
  }
  return subset(rows);
}

namespace {

const std::vector<std::string> kCellsHeader = {
    "cell_id", "batch_date", "charging_protocol", "nominal_capacity_ah"};
const std::vector<std::string> kCyclesHeader = {
    "cell_id", "cycle_index", "discharge_capacity_ah", "charge_time_min",
    "internal_resistance_ohm"};
const std::vector<std::string> kCurvesHeader = {
    "cell_id", "cycle_index", "voltage_v", "discharge_capacity_ah",
    "temperature_c"};

void expect_field_count(const CsvReader& r, const std::vector<std::string>& f,
                        std::size_t want) {
  if (f.size() != want) {
    r.fail("expected " + std::to_string(want) + " fields, got " +
           std::to_string(f.size()));
  }
}

CycleSummary* find_cycle_mutable(CellRecord& cell, int cycle_index) {
  const auto it = std::lower_bound(
      cell.cycles.begin(), cell.cycles.end(), cycle_index,
      [](const CycleSummary& c, int idx) { return c.cycle_index < idx; });
  if (it == cell.cycles.end() || it->cycle_index != cycle_index) return nullptr;
  return &*it;
}

}  // namespace

std::vector<CellRecord> load_cells(const std::filesystem::path& cells_path,
                                   const std::filesystem::path& cycles_path,
                                   const std::filesystem::path& curves_path) {
  std::vector<CellRecord> cells;
  std::unordered_map<std::string, std::size_t> index;

  {
    CsvReader r(cells_path);
    r.expect_header(kCellsHeader);
    std::vector<std::string> f;
    while (r.next_row(f)) {
      expect_field_count(r, f, 4);
      if (index.count(f[0])) r.fail("duplicate cell_id '" + f[0] + "'");
      CellRecord cell;
      cell.cell_id = f[0];
      cell.batch_date = f[1];
      cell.charging_protocol = f[2];
      cell.nominal_capacity_ah = r.field_double(f[3], "nominal_capacity_ah");
      if (!(cell.nominal_capacity_ah > 0.0)) {
        r.fail("nominal_capacity_ah must be > 0");
      }
      index.emplace(cell.cell_id, cells.size());
      cells.push_back(std::move(cell));
    }
  }

  {
    CsvReader r(cycles_path);
    r.expect_header(kCyclesHeader);
    std::vector<std::string> f;
    while (r.next_row(f)) {
      expect_field_count(r, f, 5);
      const auto it = index.find(f[0]);
      if (it == index.end()) {
        throw ReferentialError(r.path() + ":" + std::to_string(r.line()) +
                               ": cycle row references unknown cell '" + f[0] +
                               "'");
      }
      CycleSummary cyc;
      cyc.cycle_index = static_cast<int>(r.field_int(f[1], "cycle_index"));
      if (cyc.cycle_index < 1) r.fail("cycle_index must be >= 1");
      cyc.discharge_capacity_ah =
          r.field_double(f[2], "discharge_capacity_ah");
      if (cyc.discharge_capacity_ah < 0.0) {
        r.fail("discharge_capacity_ah must be >= 0");
      }
      cyc.charge_time_min = r.field_double(f[3], "charge_time_min");
      if (!f[4].empty()) {
        cyc.internal_resistance_ohm =
            r.field_double(f[4], "internal_resistance_ohm");
      }
      cells[it->second].cycles.push_back(std::move(cyc));
    }
  }

  for (auto& cell : cells) {
    std::stable_sort(cell.cycles.begin(), cell.cycles.end(),
                     [](const CycleSummary& a, const CycleSummary& b) {
                       return a.cycle_index < b.cycle_index;
                     });
    for (std::size_t i = 1; i < cell.cycles.size(); ++i) {
      if (cell.cycles[i].cycle_index == cell.cycles[i - 1].cycle_index) {
        throw ParseError("cell '" + cell.cell_id + "': duplicate cycle_index " +
                         std::to_string(cell.cycles[i].cycle_index));
      }
    }
  }

  {
    CsvReader r(curves_path);
    r.expect_header(kCurvesHeader);
    std::vector<std::string> f;
    while (r.next_row(f)) {
      expect_field_count(r, f, 5);
      const auto it = index.find(f[0]);
      if (it == index.end()) {
        throw ReferentialError(r.path() + ":" + std::to_string(r.line()) +
                               ": curve row references unknown cell '" + f[0] +
                               "'");
      }
      const int cycle_index = static_cast<int>(r.field_int(f[1], "cycle_index"));
      CellRecord& cell = cells[it->second];
      CycleSummary* cyc = find_cycle_mutable(cell, cycle_index);
      if (cyc == nullptr) {
        throw ReferentialError(r.path() + ":" + std::to_string(r.line()) +
                               ": curve row references unknown cycle " +
                               std::to_string(cycle_index) + " of cell '" +
                               f[0] + "'");
      }
      DischargeCurveSample s;
      s.voltage_v = r.field_double(f[2], "voltage_v");
      s.capacity_ah = r.field_double(f[3], "discharge_capacity_ah");
      s.temperature_c = r.field_double(f[4], "temperature_c");
      if (!(s.voltage_v > 0.0) || !std::isfinite(s.voltage_v)) {
        r.fail("voltage_v must be finite and > 0");
      }
      if (s.capacity_ah < 0.0) r.fail("discharge_capacity_ah must be >= 0");
      cyc->curve.push_back(s);
    }
  }

  return cells;
}

void save_cells(const std::vector<CellRecord>& cells,
                const std::filesystem::path& cells_path,
                const std::filesystem::path& cycles_path,
                const std::filesystem::path& curves_path) {
  AtomicFile cf(cells_path);
  AtomicFile yf(cycles_path);
  AtomicFile vf(curves_path);
  cf.write("cell_id,batch_date,charging_protocol,nominal_capacity_ah\n");
  yf.write(
      "cell_id,cycle_index,discharge_capacity_ah,charge_time_min,"
      "internal_resistance_ohm\n");
  vf.write("cell_id,cycle_index,voltage_v,discharge_capacity_ah,temperature_c\n");
  for (const CellRecord& cell : cells) {
    cf.write_row({cell.cell_id, cell.batch_date, cell.charging_protocol,
                  format_double(cell.nominal_capacity_ah)});
    for (const CycleSummary& cyc : cell.cycles) {
      yf.write_row({cell.cell_id, std::to_string(cyc.cycle_index),
                    format_double(cyc.discharge_capacity_ah),
                    format_double(cyc.charge_time_min),
                    cyc.internal_resistance_ohm
                        ? format_double(*cyc.internal_resistance_ohm)
                        : std::string()});
      for (const DischargeCurveSample& s : cyc.curve) {
        vf.write_row({cell.cell_id, std::to_string(cyc.cycle_index),
                      format_double(s.voltage_v), format_double(s.capacity_ah),
                      format_double(s.temperature_c)});
      }
    }
  }
  cf.commit();
  yf.commit();
  vf.commit();
}

LabeledCell label_cycle_life(const CellRecord& cell, double eol_fraction) {
  if (cell.cycles.empty()) {
    throw CensoredCellError("cell '" + cell.cell_id + "' has no cycles");
  }
  const double threshold = eol_fraction * cell.nominal_capacity_ah;
  for (const CycleSummary& cyc : cell.cycles) {
    if (cyc.discharge_capacity_ah < threshold) {
      return LabeledCell{cell, cyc.cycle_index};
    }
  }
  throw CensoredCellError("cell '" + cell.cell_id +
                          "' never falls below the end-of-life threshold");
}

LabelReport label_all(const std::vector<CellRecord>& cells,
                      double eol_fraction) {
  LabelReport report;
  for (const CellRecord& cell : cells) {
    try {
      report.labeled.push_back(label_cycle_life(cell, eol_fraction));
    } catch (const CensoredCellError&) {
      report.censored_ids.push_back(cell.cell_id);
    }
  }
  return report;
}

DatasetSplit split_train_test(const std::vector<LabeledCell>& cells,
                              const std::map<std::string, BatchCounts>& counts,
                              std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_batch;
  for (const LabeledCell& lc : cells) {
    by_batch[lc.cell.batch_date].push_back(lc.cell.cell_id);
  }

  DatasetSplit split;
  split.seed = seed;
  for (const auto& [batch, want] : counts) {
    if (want.train_n < 0 || want.test_n < 0) {
      throw ConfigError("batch '" + batch + "': negative split counts");
    }
    auto it = by_batch.find(batch);
    const std::size_t have = it == by_batch.end() ? 0 : it->second.size();
    const std::size_t need =
        static_cast<std::size_t>(want.train_n) + want.test_n;
    if (have < need) {
      throw ConfigError("batch '" + batch + "': needs " + std::to_string(need) +
                        " cells, has " + std::to_string(have));
    }
    std::vector<std::string>& ids = it->second;
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, hash_string(batch)));
    rng.shuffle(ids);
    for (int k = 0; k < want.train_n; ++k) {
      split.train_ids.push_back(ids[k]);
    }
    for (int k = 0; k < want.test_n; ++k) {
      split.test_ids.push_back(ids[want.train_n + k]);
    }
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

CellRecord truncate_to_early_cycles(const CellRecord& cell, int w) {
  if (w < 1) throw ConfigError("truncation window must be >= 1");
  if (cell.max_cycle_index() < w) {
    throw TruncationError("cell '" + cell.cell_id + "' has only " +
                          std::to_string(cell.cycles.size()) +
                          " cycles, cannot truncate to " + std::to_string(w));
  }
  CellRecord out = cell;
  out.cycles.clear();
  for (const CycleSummary& cyc : cell.cycles) {
    if (cyc.cycle_index <= w) out.cycles.push_back(cyc);
  }
  return out;
}

}  // namespace qrf
