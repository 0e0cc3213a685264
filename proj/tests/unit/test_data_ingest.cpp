#include <algorithm>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "qrf/data_ingest.hpp"
#include "qrf/errors.hpp"
#include "qrf/rng.hpp"

using namespace qrf;

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

struct Fixture {
  std::filesystem::path dir;
  std::filesystem::path cells, cycles, curves;

  explicit Fixture(const std::string& tag) : dir(testutil::temp_dir(tag)) {
    cells = dir / "cells.csv";
    cycles = dir / "cycles.csv";
    curves = dir / "curves.csv";
  }
};

const char* kCellsTwo =
    "cell_id,batch_date,charging_protocol,nominal_capacity_ah\n"
    "b1c0,2017-05-12,5.4C(70%)-3C,1.1\n"
    "b1c1,2017-05-12,6C(40%)-3C,1.1\n";

const char* kCyclesTwo =
    "cell_id,cycle_index,discharge_capacity_ah,charge_time_min,"
    "internal_resistance_ohm\n"
    "b1c0,1,1.07,12.5,0.016\n"
    "b1c0,2,1.069,12.4,0.0161\n"
    "b1c0,3,1.068,12.4,\n"
    "b1c1,1,1.05,13.0,0.017\n"
    "b1c1,2,1.049,13.1,0.017\n";

const char* kCurvesEmpty =
    "cell_id,cycle_index,voltage_v,discharge_capacity_ah,temperature_c\n";

}  // namespace

TEST_CASE("load_cells parses the two-cell fixture") {
  Fixture fx("load_two");
  write_file(fx.cells, kCellsTwo);
  write_file(fx.cycles, kCyclesTwo);
  write_file(fx.curves,
             std::string(kCurvesEmpty) +
                 "b1c0,2,3.3,0.1,30.5\n"
                 "b1c0,2,3.2,0.4,30.9\n"
                 "b1c0,2,3.1,0.7,31.2\n");

  const std::vector<CellRecord> cells =
      load_cells(fx.cells, fx.cycles, fx.curves);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].cell_id == "b1c0");
  CHECK(cells[0].cycles.size() == 3);
  CHECK(cells[1].cycles.size() == 2);
  CHECK(cells[0].cycles[1].curve.size() == 3);
  CHECK(!cells[0].cycles[2].internal_resistance_ohm.has_value());
  CHECK(cells[1].charging_protocol == "6C(40%)-3C");
}

TEST_CASE("load_cells with an empty curves file yields summary-only cycles") {
  Fixture fx("load_nocurves");
  write_file(fx.cells, kCellsTwo);
  write_file(fx.cycles, kCyclesTwo);
  write_file(fx.curves, kCurvesEmpty);

  const std::vector<CellRecord> cells =
      load_cells(fx.cells, fx.cycles, fx.curves);
  REQUIRE(cells.size() == 2);
  for (const CellRecord& cell : cells) {
    for (const CycleSummary& cyc : cell.cycles) {
      CHECK(cyc.curve.empty());
    }
  }
}

TEST_CASE("load_cells sorts out-of-order cycle rows") {
  Fixture fx("load_unsorted");
  write_file(fx.cells,
             "cell_id,batch_date,charging_protocol,nominal_capacity_ah\n"
             "c,2017-05-12,p,1.1\n");
  write_file(fx.cycles,
             "cell_id,cycle_index,discharge_capacity_ah,charge_time_min,"
             "internal_resistance_ohm\n"
             "c,3,1.0,12,\n"
             "c,1,1.02,12,\n"
             "c,2,1.01,12,\n");
  write_file(fx.curves, kCurvesEmpty);

  const std::vector<CellRecord> cells =
      load_cells(fx.cells, fx.cycles, fx.curves);
  REQUIRE(cells[0].cycles.size() == 3);
  CHECK(cells[0].cycles[0].cycle_index == 1);
  CHECK(cells[0].cycles[1].cycle_index == 2);
  CHECK(cells[0].cycles[2].cycle_index == 3);
  CHECK(cells[0].cycles[0].discharge_capacity_ah == 1.02);
}

TEST_CASE("load_cells error paths") {
  Fixture fx("load_errors");
  write_file(fx.cells, kCellsTwo);
  write_file(fx.curves, kCurvesEmpty);

  SUBCASE("malformed numeric field names file and line") {
    write_file(fx.cycles,
               "cell_id,cycle_index,discharge_capacity_ah,charge_time_min,"
               "internal_resistance_ohm\n"
               "b1c0,1,oops,12.5,\n");
    try {
      load_cells(fx.cells, fx.cycles, fx.curves);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("cycles.csv:2") != std::string::npos);
      CHECK(msg.find("oops") != std::string::npos);
    }
  }

  SUBCASE("curve referencing unknown cell") {
    write_file(fx.cycles, kCyclesTwo);
    write_file(fx.curves,
               std::string(kCurvesEmpty) + "ghost,1,3.3,0.1,30.0\n");
    CHECK_THROWS_AS(load_cells(fx.cells, fx.cycles, fx.curves),
                    ReferentialError);
  }

  SUBCASE("duplicate cycle rows rejected") {
    write_file(fx.cycles,
               "cell_id,cycle_index,discharge_capacity_ah,charge_time_min,"
               "internal_resistance_ohm\n"
               "b1c0,1,1.0,12,\n"
               "b1c0,1,1.0,12,\n");
    CHECK_THROWS_AS(load_cells(fx.cells, fx.cycles, fx.curves), ParseError);
  }
}

TEST_CASE("save/load round-trip preserves every field") {
  Fixture fx("roundtrip");
  write_file(fx.cells, kCellsTwo);
  write_file(fx.cycles, kCyclesTwo);
  write_file(fx.curves,
             std::string(kCurvesEmpty) +
                 "b1c0,2,3.3,0.1,30.5\n"
                 "b1c0,2,3.2,0.4,30.9\n");

  const std::vector<CellRecord> first =
      load_cells(fx.cells, fx.cycles, fx.curves);
  Fixture fx2("roundtrip_out");
  save_cells(first, fx2.cells, fx2.cycles, fx2.curves);
  const std::vector<CellRecord> second =
      load_cells(fx2.cells, fx2.cycles, fx2.curves);

  REQUIRE(first.size() == second.size());
  for (std::size_t c = 0; c < first.size(); ++c) {
    CHECK(first[c].cell_id == second[c].cell_id);
    CHECK(first[c].batch_date == second[c].batch_date);
    CHECK(first[c].nominal_capacity_ah == second[c].nominal_capacity_ah);
    REQUIRE(first[c].cycles.size() == second[c].cycles.size());
    for (std::size_t k = 0; k < first[c].cycles.size(); ++k) {
      const CycleSummary& a = first[c].cycles[k];
      const CycleSummary& b = second[c].cycles[k];
      CHECK(a.cycle_index == b.cycle_index);
      CHECK(a.discharge_capacity_ah == b.discharge_capacity_ah);
      CHECK(a.charge_time_min == b.charge_time_min);
      CHECK(a.internal_resistance_ohm == b.internal_resistance_ohm);
      REQUIRE(a.curve.size() == b.curve.size());
      for (std::size_t s = 0; s < a.curve.size(); ++s) {
        CHECK(a.curve[s].voltage_v == b.curve[s].voltage_v);
        CHECK(a.curve[s].capacity_ah == b.curve[s].capacity_ah);
        CHECK(a.curve[s].temperature_c == b.curve[s].temperature_c);
      }
    }
  }
}

TEST_CASE("label_cycle_life crosses a linear fade at cycle 222") {
  // Q(n) = 1.1 - 0.001*(n-1), threshold 0.88: first strict crossing at 222.
  const CellRecord cell = testutil::make_fade_cell("c", 400, 1.1, 0.001);
  const LabeledCell labeled = label_cycle_life(cell, 0.8);
  CHECK(labeled.cycle_life == 222);
}

TEST_CASE("label_cycle_life censors a cell that never crosses") {
  const CellRecord cell = testutil::make_fade_cell("c", 100, 1.1 * 0.95, 0.0);
  CHECK_THROWS_AS(label_cycle_life(cell, 0.8), CensoredCellError);
}

TEST_CASE("label_cycle_life takes the first crossing of a dip") {
  CellRecord cell = testutil::make_fade_cell("c", 600, 1.0, 0.0);
  cell.cycles[499].discharge_capacity_ah = 0.5;  // dip at cycle 500, recovers
  const LabeledCell labeled = label_cycle_life(cell, 0.8);
  CHECK(labeled.cycle_life == 500);
}

TEST_CASE("label boundary is strict") {
  CellRecord cell = testutil::make_fade_cell("c", 3, 1.0, 0.0, 1.0);
  cell.cycles[1].discharge_capacity_ah = 0.8;   // exactly the threshold
  cell.cycles[2].discharge_capacity_ah = 0.79;  // strictly below
  CHECK(label_cycle_life(cell, 0.8).cycle_life == 3);
}

TEST_CASE("labeling is monotone in the threshold fraction") {
  Rng rng(99);
  for (int rep = 0; rep < 50; ++rep) {
    const double q0 = rng.uniform(1.0, 1.1);
    const double drop = rng.uniform(0.0005, 0.003);
    const CellRecord cell = testutil::make_fade_cell("c", 1500, q0, drop);
    const double f1 = rng.uniform(0.5, 0.9);
    const double f2 = f1 + rng.uniform(0.0, 0.9 - f1);
    int life1 = 0, life2 = 0;
    try {
      life1 = label_cycle_life(cell, f1).cycle_life;
    } catch (const CensoredCellError&) {
      continue;
    }
    try {
      life2 = label_cycle_life(cell, f2).cycle_life;
    } catch (const CensoredCellError&) {
      continue;
    }
    CHECK(life2 <= life1);  // raising the fraction never increases cycle life
  }
}

namespace {

std::vector<LabeledCell> make_batch_cells() {
  // 124 cells over the three batches: 41, 43, 40.
  std::vector<LabeledCell> cells;
  const char* batches[3] = {"2017-05-12", "2017-06-30", "2018-04-12"};
  const int sizes[3] = {41, 43, 40};
  int serial = 0;
  for (int b = 0; b < 3; ++b) {
    for (int k = 0; k < sizes[b]; ++k) {
      CellRecord cell = testutil::make_fade_cell(
          "b" + std::to_string(b + 1) + "c" + std::to_string(k), 5, 1.1, 0.0,
          1.1, batches[b]);
      cells.push_back(LabeledCell{cell, 500 + serial++});
    }
  }
  return cells;
}

}  // namespace

TEST_CASE("split honors the published per-batch counts") {
  const std::vector<LabeledCell> cells = make_batch_cells();
  const std::map<std::string, BatchCounts> counts = {
      {"2017-05-12", {27, 14}},
      {"2017-06-30", {36, 7}},
      {"2018-04-12", {36, 4}},
  };
  const DatasetSplit split = split_train_test(cells, counts, 42);
  CHECK(split.train_ids.size() == 99);
  CHECK(split.test_ids.size() == 25);

  // Disjointness.
  for (const std::string& id : split.test_ids) {
    CHECK(std::find(split.train_ids.begin(), split.train_ids.end(), id) ==
          split.train_ids.end());
  }
}

TEST_CASE("split with everything in train leaves the test set empty") {
  const std::vector<LabeledCell> cells = make_batch_cells();
  const std::map<std::string, BatchCounts> counts = {
      {"2017-05-12", {41, 0}},
      {"2017-06-30", {43, 0}},
      {"2018-04-12", {40, 0}},
  };
  const DatasetSplit split = split_train_test(cells, counts, 1);
  CHECK(split.train_ids.size() == 124);
  CHECK(split.test_ids.empty());
}

TEST_CASE("split determinism and seed sensitivity") {
  const std::vector<LabeledCell> cells = make_batch_cells();
  const std::map<std::string, BatchCounts> counts = {
      {"2017-05-12", {27, 14}},
      {"2017-06-30", {36, 7}},
      {"2018-04-12", {36, 4}},
  };
  const DatasetSplit a = split_train_test(cells, counts, 7);
  const DatasetSplit b = split_train_test(cells, counts, 7);
  CHECK(a.train_ids == b.train_ids);
  CHECK(a.test_ids == b.test_ids);

  const DatasetSplit c = split_train_test(cells, counts, 8);
  CHECK(a.train_ids != c.train_ids);
}

TEST_CASE("split rejects a batch with too few cells") {
  const std::vector<LabeledCell> cells = make_batch_cells();
  const std::map<std::string, BatchCounts> counts = {{"2017-05-12", {40, 14}}};
  CHECK_THROWS_AS(split_train_test(cells, counts, 1), ConfigError);
}

TEST_CASE("truncate_to_early_cycles") {
  const CellRecord cell = testutil::make_fade_cell("c", 1000, 1.1, 0.0001);

  SUBCASE("w = 100 keeps 100 cycles") {
    const CellRecord cut = truncate_to_early_cycles(cell, 100);
    CHECK(cut.cycles.size() == 100);
    CHECK(cut.max_cycle_index() == 100);
  }
  SUBCASE("w = max index is the identity") {
    const CellRecord cut = truncate_to_early_cycles(cell, 1000);
    CHECK(cut.cycles.size() == cell.cycles.size());
  }
  SUBCASE("w beyond the record errors with the available count") {
    try {
      truncate_to_early_cycles(cell, 1001);
      FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
      CHECK(std::string(e.what()).find("1000") != std::string::npos);
    }
  }
}
